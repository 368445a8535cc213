#pragma once

#include "skewnet/compat_graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace skewnet
{
    // Number of tasks at each server.
    using QueueState = std::vector<std::int64_t>;

    // Time averages of one server group (servers sharing a label; unlabelled servers form "all").
    struct GroupSummary
    {
        std::string name;
        std::size_t size = 0;
        // Extremes and mean over the group's per-server time averages.
        double min_of_means = 0.0;
        double mean_of_means = 0.0;
        double max_of_means = 0.0;
        // Time averages of the instantaneous minimum, mean and maximum across the group.
        double avg_min = 0.0;
        double avg_mean = 0.0;
        double avg_max = 0.0;
        double avg_min_se = 0.0; // batch-means standard errors
        double avg_mean_se = 0.0;
        // Fraction of time the group minimum is >= k, one entry per tail threshold.
        std::vector<double> min_at_least;
    };

    struct TracePoint
    {
        double time = 0.0;
        // One entry per group, in OccupancyMetrics::groups order.
        std::vector<double> min, mean, max;
    };

    struct OccupancyMetrics
    {
        std::vector<unsigned> tail_ks;
        std::vector<std::string> server_group;      // group name of each server
        std::vector<double> mean_queue;             // per server
        std::vector<double> mean_queue_se;          // per server, batch means
        std::vector<std::vector<double>> tail;      // [server][k index]: time fraction with X(u) >= k
        std::vector<GroupSummary> groups;
        std::vector<TracePoint> trace;
        double sim_time = 0.0;      // time reached by the run
        double window = 0.0;        // length of the averaging window
        std::size_t batches = 0;    // completed batches behind the standard errors
        std::uint64_t events = 0;
        std::uint64_t arrivals = 0;
        std::uint64_t departures = 0; // tasks actually removed
        bool partial = false;         // event cap hit before the horizon
        QueueState final_state;

        const GroupSummary *group(const std::string &name) const;
    };

    // Integrates a piecewise-constant queue state over [window_start, window_end], split into
    // equal batches for batch-means errors, and optionally samples group statistics on a grid.
    class OccupancyRecorder
    {
    public:
        OccupancyRecorder(const CompatGraph &g, QueueState x0, std::vector<unsigned> tail_ks, double window_start,
                          double window_end, std::size_t batches, double trace_interval = 0.0);

        const QueueState &state() const noexcept { return x_; }
        std::int64_t operator[](ServerId u) const noexcept { return x_[u]; }

        // Adds delta to X(u) at time t. Times must be nondecreasing.
        void change(ServerId u, std::int64_t delta, double t);

        // Closes the run at time t_end; partial runs average over the part of the window reached.
        OccupancyMetrics finish(double t_end, bool partial);

    private:
        struct Group
        {
            std::string name;
            std::vector<ServerId> members;
            std::vector<std::size_t> level_count; // servers at each occupancy level
            std::int64_t min = 0, max = 0, sum = 0;
            double last = 0.0;
            double area_min = 0.0, area_max = 0.0, area_sum = 0.0;
            std::vector<double> area_min_ge;
        };

        double clip(double from, double to) const noexcept;
        void advance(double t);
        void flush_server(ServerId u, double t);
        void flush_group(Group &grp, double t);
        void flush_all(double t);
        void snapshot();
        void level_add(Group &grp, std::int64_t level);
        void level_remove(Group &grp, std::int64_t level);

        QueueState x_;
        std::vector<unsigned> ks_;
        double ws_, we_;
        std::size_t batches_;
        double trace_dt_;

        std::vector<double> last_;
        std::vector<double> area_;
        std::vector<double> area_tail_; // [u * ks + i]
        std::vector<std::size_t> group_of_;
        std::vector<Group> groups_;

        std::vector<double> checkpoints_;
        std::size_t next_checkpoint_ = 0;
        // Cumulative areas at each passed checkpoint: per-server area, then per-group min and sum areas.
        std::vector<std::vector<double>> snaps_;
        double next_trace_ = 0.0;
        std::vector<TracePoint> trace_;
    };
}
