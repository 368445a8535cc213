#pragma once

#include "skewnet/compat_graph.hpp"
#include "skewnet/occupancy.hpp"
#include "skewnet/rng.hpp"

#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace skewnet
{
    struct Policy
    {
        enum class Kind
        {
            jsq,
            power_of_d,
        };
        Kind kind = Kind::jsq;
        std::size_t d = 0; // sample size for power_of_d

        static Policy jsq() { return {}; }
        static Policy power_of(std::size_t d);
        // "jsq" or "pod:<d>".
        static Policy parse(const std::string &text);
        std::string to_string() const;
        bool operator==(const Policy &) const = default;
    };

    struct SimConfig
    {
        double horizon = 1e4;
        std::uint64_t max_events = 0; // 0 means no cap
        double warmup_fraction = 0.25;
        std::uint64_t seed = 0;
        std::vector<unsigned> tail_ks = {1};
        std::size_t batches = 20;
        double trace_interval = 0.0; // 0 disables the group trace

        void validate() const;
    };

    nlohmann::json to_json(const SimConfig &cfg);

    // Hooks for instrumentation. They never consume randomness.
    class SimObserver
    {
    public:
        virtual ~SimObserver() = default;
        // `candidates` is the policy's candidate set, `state` the occupancy before the placement.
        virtual void on_arrival(double /*t*/, DispatcherId /*d*/, std::span<const ServerId> /*candidates*/,
                                ServerId /*chosen*/, const QueueState & /*state*/)
        {
        }
        virtual void on_departure_tick(double /*t*/, std::size_t /*block*/) {}
        virtual void on_departure(double /*t*/, ServerId /*u*/) {}
    };

    // Uniform choice among the least-occupied candidates. One draw from rng.
    ServerId pick_least_loaded(std::span<const ServerId> candidates, const QueueState &x, Stream &rng);

    // Writes a uniform size-min(d, |pool|) subset of pool into out, without replacement.
    void sample_subset(std::span<const ServerId> pool, std::size_t d, Stream &rng, std::vector<ServerId> &out);

    // Exact sample path of the load balancing chain: independent Poisson arrivals per dispatcher,
    // one Poisson potential-departure clock per departure block, least-loaded placement with
    // uniform tie breaking. x0 empty means the all-empty start.
    OccupancyMetrics simulate(const CompatGraph &g, const Policy &policy, const QueueState &x0, const SimConfig &cfg,
                              SimObserver *observer = nullptr);

    struct SweepRun
    {
        std::size_t run_id = 0;
        nlohmann::json params; // flat object of scalar parameters
        std::uint64_t seed = 0;
        OccupancyMetrics metrics;
    };

    // One simulate per parameter point with seed cfg.seed + index; `threads` > 1 runs points in
    // parallel. Output order and content do not depend on the thread count.
    std::vector<SweepRun> sweep(const std::function<CompatGraph(const nlohmann::json &)> &make_graph,
                                const std::vector<nlohmann::json> &points, const Policy &policy,
                                const SimConfig &cfg, std::size_t threads = 1);

    // Window-weighted pooling of two runs on the same graph.
    OccupancyMetrics merge_metrics(const OccupancyMetrics &a, const OccupancyMetrics &b);

    // Long format, one row per (run, server):
    // run_id, <param columns>, server_id, group, mean_queue, p_ge_<k>..., sim_time, events
    void write_server_csv(std::ostream &out, const std::vector<SweepRun> &runs);

    // One row per (run, group):
    // run_id, <param columns>, group, size, min_of_means, mean_of_means, max_of_means, avg_min,
    // avg_min_se, avg_mean, avg_mean_se, avg_max, min_ge_<k>..., sim_time, events
    void write_group_csv(std::ostream &out, const std::vector<SweepRun> &runs);

    // time, group, min, mean, max
    void write_trace_csv(std::ostream &out, const OccupancyMetrics &m);
}
