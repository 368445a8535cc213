#pragma once

#include "skewnet/config.hpp"
#include "skewnet/ctmc_sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace skewnet
{
    // "skewnet <version>", recorded in every provenance sidecar.
    std::string code_version();

    // Generator families by name: dandelion, cdn, random-bipartite, er. Parameters are the spec
    // fields of the family (missing ones take the spec defaults); the seed feeds the random ones.
    CompatGraph build_family(const std::string &family, const nlohmann::json &params, std::uint64_t seed);

    // Writes `content` to dir/name and dir/name.json with {"file", "code_version", ...provenance}.
    std::filesystem::path write_artifact(const std::filesystem::path &dir, const std::string &name,
                                         const std::string &content, const nlohmann::json &provenance);

    struct DandelionPoint
    {
        std::size_t n = 0;
        std::size_t replicas = 0;
        // Across replicas: time average of the boundary group mean and of the central group minimum.
        double boundary_mean = 0.0, boundary_mean_se = 0.0;
        double central_min = 0.0, central_min_se = 0.0;
    };

    struct DandelionSweepResult
    {
        std::vector<SweepRun> runs; // point index = n index * seeds + replica
        std::vector<DandelionPoint> points;
        double reference = 0.0; // exact basic-process mean per server, NaN when skipped
        double reference_boundary_mass = 0.0;
    };

    DandelionSweepResult run_dandelion_sweep(const ExperimentConfig &cfg);
    // n, replicas, boundary_mean, boundary_mean_se, central_min, central_min_se, basic_reference
    std::string dandelion_summary_csv(const DandelionSweepResult &r);

    // One run per seed on cdn_network, with the group trace when sim.trace_interval > 0.
    std::vector<SweepRun> run_cdn(const ExperimentConfig &cfg);
    // run_id, seed, edge_mean, origin_mean, origin_avg_min, origin_avg_max, ratio, origin_min_ge_<k>...
    std::string cdn_summary_csv(const std::vector<SweepRun> &runs);
    // run_id, seed, time, group, min, mean, max
    std::string trace_csv(const std::vector<SweepRun> &runs);

    struct SkewSample
    {
        std::size_t n = 0;
        std::size_t replica = 0;
        std::uint64_t seed = 0;
        ServerId u_max = 0;
        std::size_t degree = 0;
        std::size_t n_alpha = 0;
    };

    struct SkewPoint
    {
        std::size_t n = 0;
        std::size_t replicas = 0;
        double median = 0.0;
        double mean = 0.0;
        std::size_t min = 0, max = 0;
    };

    struct SkewGrowthResult
    {
        std::string family; // random-bipartite or er
        std::vector<SkewSample> samples;
        std::vector<SkewPoint> points;
    };

    // Seeds run cfg.seed + index over the flattened (n, replica) list.
    SkewGrowthResult run_skew_growth(const ExperimentConfig &cfg, const std::string &family);
    // family, n, replica, seed, u_max, degree, n_alpha
    std::string skew_samples_csv(const SkewGrowthResult &r);
    // family, n, replicas, median_n_alpha, mean_n_alpha, min_n_alpha, max_n_alpha
    std::string skew_summary_csv(const SkewGrowthResult &r);

    // A graph file simulated custom.replicas times, or a family over the product of custom.grid.
    std::vector<SweepRun> run_custom(const ExperimentConfig &cfg);

    // Runs cfg.preset and writes config.resolved.json plus the preset's CSVs under
    // cfg.output_dir. Returns the paths written, sidecars excluded.
    std::vector<std::filesystem::path> run_preset(const ExperimentConfig &cfg);
}
