#include "skewnet/graph_io.hpp"

#include "skewnet/errors.hpp"

#include <fstream>
#include <string>

namespace skewnet
{
    namespace
    {
        std::size_t dense_ids(const nlohmann::json &arr, const char *field)
        {
            if (!arr.is_array())
                throw DomainError(std::string(field) + ": expected an array of ids");
            for (std::size_t i = 0; i < arr.size(); ++i)
                if (!arr[i].is_number_unsigned() && !(arr[i].is_number_integer() && arr[i].get<long long>() >= 0))
                    throw DomainError(std::string(field) + "[" + std::to_string(i) + "]: expected a nonnegative integer");
                else if (arr[i].get<std::size_t>() != i)
                    throw DomainError(std::string(field) + ": ids must be dense and ascending from 0");
            return arr.size();
        }

        std::vector<double> rate_map(const nlohmann::json &j, const char *field, std::size_t n)
        {
            if (!j.contains(field) || !j.at(field).is_object())
                throw DomainError(std::string(field) + ": expected an object keyed by id");
            std::vector<double> out(n, 0.0);
            std::vector<bool> seen(n, false);
            for (const auto &[key, value] : j.at(field).items())
            {
                std::size_t id = 0;
                try
                {
                    std::size_t pos = 0;
                    id = std::stoul(key, &pos);
                    if (pos != key.size())
                        throw std::invalid_argument(key);
                }
                catch (const std::exception &)
                {
                    throw DomainError(std::string(field) + ": key '" + key + "' is not an id");
                }
                if (id >= n)
                    throw DomainError(std::string(field) + ": unknown id " + key);
                if (!value.is_number())
                    throw DomainError(std::string(field) + "." + key + ": expected a number");
                out[id] = value.get<double>();
                seen[id] = true;
            }
            for (std::size_t i = 0; i < n; ++i)
                if (!seen[i])
                    throw DomainError(std::string(field) + ": missing id " + std::to_string(i));
            return out;
        }
    }

    nlohmann::json graph_to_json(const CompatGraph &g)
    {
        nlohmann::json j;
        auto ids = [](std::size_t n)
        {
            nlohmann::json a = nlohmann::json::array();
            for (std::size_t i = 0; i < n; ++i)
                a.push_back(i);
            return a;
        };
        j["dispatchers"] = ids(g.num_dispatchers());
        j["servers"] = ids(g.num_servers());
        nlohmann::json edges = nlohmann::json::array();
        for (const auto &[d, u] : g.edges())
            edges.push_back({d, u});
        j["edges"] = std::move(edges);
        nlohmann::json lam = nlohmann::json::object();
        for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
            lam[std::to_string(d)] = g.arrival_rate(d);
        j["arrival_rate"] = std::move(lam);
        nlohmann::json mu = nlohmann::json::object();
        for (ServerId u = 0; u < g.num_servers(); ++u)
            mu[std::to_string(u)] = g.service_rate(u);
        j["service_rate"] = std::move(mu);
        j["departure_partition"] = g.blocks();
        bool labelled = false;
        for (ServerId u = 0; u < g.num_servers(); ++u)
            labelled = labelled || !g.server_group(u).empty();
        if (labelled)
        {
            nlohmann::json groups = nlohmann::json::object();
            for (ServerId u = 0; u < g.num_servers(); ++u)
                groups[std::to_string(u)] = g.server_group(u);
            j["server_group"] = std::move(groups);
        }
        if (!g.provenance().is_null())
            j["provenance"] = g.provenance();
        return j;
    }

    CompatGraph graph_from_json(const nlohmann::json &j)
    {
        if (!j.is_object())
            throw DomainError("graph: expected a JSON object");
        for (const char *field : {"dispatchers", "servers", "edges"})
            if (!j.contains(field))
                throw DomainError(std::string("graph: missing field '") + field + "'");
        GraphSpec s;
        s.num_dispatchers = dense_ids(j.at("dispatchers"), "dispatchers");
        s.num_servers = dense_ids(j.at("servers"), "servers");
        const auto &edges = j.at("edges");
        if (!edges.is_array())
            throw DomainError("edges: expected an array of pairs");
        for (std::size_t i = 0; i < edges.size(); ++i)
        {
            const auto &e = edges[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
                e[0].get<long long>() < 0 || e[1].get<long long>() < 0)
                throw DomainError("edges[" + std::to_string(i) + "]: expected [dispatcher, server]");
            s.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
        }
        s.arrival_rate = rate_map(j, "arrival_rate", s.num_dispatchers);
        s.service_rate = rate_map(j, "service_rate", s.num_servers);
        if (j.contains("departure_partition"))
        {
            try
            {
                s.departure_partition = j.at("departure_partition").get<std::vector<std::vector<ServerId>>>();
            }
            catch (const nlohmann::json::exception &)
            {
                throw DomainError("departure_partition: expected an array of server-id arrays");
            }
            // All-singleton partitions are the default representation.
            if (s.departure_partition.size() == s.num_servers)
                s.departure_partition.clear();
        }
        if (j.contains("server_group"))
        {
            const auto &groups = j.at("server_group");
            if (!groups.is_object())
                throw DomainError("server_group: expected an object keyed by server id");
            s.server_group.assign(s.num_servers, std::string{});
            for (const auto &[key, value] : groups.items())
            {
                std::size_t id = 0;
                try
                {
                    id = std::stoul(key);
                }
                catch (const std::exception &)
                {
                    throw DomainError("server_group: key '" + key + "' is not an id");
                }
                if (id >= s.num_servers || !value.is_string())
                    throw DomainError("server_group." + key + ": expected a string label for a known server");
                s.server_group[id] = value.get<std::string>();
            }
        }
        if (j.contains("provenance"))
            s.provenance = j.at("provenance");
        return CompatGraph(std::move(s));
    }

    CompatGraph load_graph(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw DomainError("cannot open graph file " + path.string());
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw DomainError("graph file " + path.string() + ": " + e.what());
        }
        return graph_from_json(j);
    }

    void save_graph(const std::filesystem::path &path, const CompatGraph &g)
    {
        std::ofstream out(path);
        if (!out)
            throw DomainError("cannot write graph file " + path.string());
        out << graph_to_json(g).dump(1) << '\n';
    }
}
