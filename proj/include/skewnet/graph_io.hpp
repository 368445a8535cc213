#pragma once

#include "skewnet/compat_graph.hpp"

#include <filesystem>

#include <json.hpp>

namespace skewnet
{
    // Graph file layout:
    //   dispatchers, servers: arrays of dense ids 0..n-1
    //   edges: array of [dispatcher, server] pairs
    //   arrival_rate, service_rate: objects keyed by id
    //   departure_partition: array of server-id arrays
    //   server_group (optional): object keyed by server id
    //   provenance (optional): generator family, params and seed
    nlohmann::json graph_to_json(const CompatGraph &g);
    CompatGraph graph_from_json(const nlohmann::json &j);

    CompatGraph load_graph(const std::filesystem::path &path);
    void save_graph(const std::filesystem::path &path, const CompatGraph &g);
}
