#pragma once

#include "skewnet/ctmc_sim.hpp"
#include "skewnet/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace skewnet
{
    // Bad configuration value. The message starts with the dotted field path.
    class ConfigError : public DomainError
    {
    public:
        ConfigError(const std::string &path, const std::string &problem)
            : DomainError(path + ": " + problem), path_(path) {}

        const std::string &path() const noexcept { return path_; }

    private:
        std::string path_;
    };

    struct SimSection
    {
        Policy policy;
        double horizon = 1e4;
        double warmup = 0.25;
        std::vector<unsigned> tail_ks = {1, 5, 10};
        std::size_t batches = 20;
        std::uint64_t max_events = 0;
        double trace_interval = 0.0;

        bool operator==(const SimSection &) const = default;
    };

    struct DandelionSection
    {
        std::size_t b = 3;
        std::size_t c = 4;
        double lambda = 2.85;
        double mu = 1.0;
        std::vector<std::size_t> n = {4, 8, 16, 32, 64};
        std::size_t seeds = 5;
        std::size_t reference_cap = 60; // K of the exact basic-process reference, 0 skips it

        bool operator==(const DandelionSection &) const = default;
    };

    struct CdnSection
    {
        std::size_t clusters = 50;
        std::size_t edge_per_cluster = 10;
        std::size_t origin_count = 10;
        double rho = 0.9;
        double tier1_rate_multiplier = 5.0;
        double mu = 1.0;
        std::size_t seeds = 3;

        bool operator==(const CdnSection &) const = default;
    };

    // Growth of |n_alpha(u_max)| for the maximum-degree server over random instances.
    struct SkewSection
    {
        std::vector<std::size_t> n;
        double b = 2.0; // mean degree, random bipartite only
        bool stabilize = false;
        std::size_t seeds = 20;
        std::size_t a = 3;
        double lambda = 0.5;
        double mu = 1.0;

        bool operator==(const SkewSection &) const = default;
    };

    // Free composition: a graph file, or a generator family over a parameter grid.
    struct CustomSection
    {
        std::string graph;
        std::string family;
        nlohmann::json params = nlohmann::json::object(); // fixed generator parameters
        nlohmann::json grid = nlohmann::json::object();   // name -> array, full product in key order
        std::size_t replicas = 1;

        bool operator==(const CustomSection &) const = default;
    };

    struct ExperimentConfig
    {
        std::string preset = "custom";
        std::string tier = "default";
        std::uint64_t seed = 1;
        std::string output_dir = "out";
        std::size_t threads = 1;
        SimSection sim;
        DandelionSection dandelion;
        CdnSection cdn;
        SkewSection random_bipartite;
        SkewSection er;
        CustomSection custom;

        // ConfigError on the first bad field.
        void validate() const;
        SimConfig sim_config() const;

        bool operator==(const ExperimentConfig &) const = default;
    };

    const std::vector<std::string> &preset_names();

    // Built-in defaults of a preset at a tier ("default" or "long").
    ExperimentConfig preset_defaults(const std::string &preset, const std::string &tier = "default");

    nlohmann::json to_json(const ExperimentConfig &cfg);

    // Overlays the fields present in j onto base. Unknown keys and wrong types are ConfigErrors.
    ExperimentConfig overlay(ExperimentConfig base, const nlohmann::json &j);

    // Reads TOML, or JSON when the extension is .json, into a JSON tree.
    nlohmann::json read_config_file(const std::filesystem::path &path);
    nlohmann::json parse_toml(const std::string &text, const std::string &source = "<toml>");

    // "a.b.c=value" into {"a": {"b": {"c": value}}}; the value is JSON when it parses, else a string.
    nlohmann::json parse_assignment(const std::string &text);

    // Merges objects key by key; anything else in `patch` replaces the target.
    void merge_into(nlohmann::json &target, const nlohmann::json &patch);

    // Defaults for the preset named in the tree (after the preset/tier overrides), then the tree.
    ExperimentConfig resolve_config(const nlohmann::json &tree);
}
