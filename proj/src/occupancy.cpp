#include "skewnet/occupancy.hpp"

#include "skewnet/errors.hpp"
#include "skewnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace skewnet
{
    const GroupSummary *OccupancyMetrics::group(const std::string &name) const
    {
        for (const auto &g : groups)
            if (g.name == name)
                return &g;
        return nullptr;
    }

    OccupancyRecorder::OccupancyRecorder(const CompatGraph &g, QueueState x0, std::vector<unsigned> tail_ks,
                                         double window_start, double window_end, std::size_t batches,
                                         double trace_interval)
        : x_(std::move(x0)), ks_(std::move(tail_ks)), ws_(window_start), we_(window_end), batches_(batches),
          trace_dt_(trace_interval)
    {
        const std::size_t ns = g.num_servers();
        if (x_.empty())
            x_.assign(ns, 0);
        if (x_.size() != ns)
            throw DomainError("initial state has " + std::to_string(x_.size()) + " entries, expected " +
                              std::to_string(ns));
        for (std::size_t u = 0; u < ns; ++u)
            if (x_[u] < 0)
                throw DomainError("initial state of server " + std::to_string(u) + " is negative");
        if (!(std::isfinite(ws_) && std::isfinite(we_) && ws_ >= 0.0 && we_ > ws_))
            throw DomainError("averaging window must satisfy 0 <= start < end");
        if (batches_ < 1)
            throw DomainError("batch count must be >= 1");
        if (!(trace_dt_ >= 0.0 && std::isfinite(trace_dt_)))
            throw DomainError("trace interval must be finite and >= 0");
        std::sort(ks_.begin(), ks_.end());
        ks_.erase(std::unique(ks_.begin(), ks_.end()), ks_.end());

        last_.assign(ns, 0.0);
        area_.assign(ns, 0.0);
        area_tail_.assign(ns * ks_.size(), 0.0);

        group_of_.assign(ns, 0);
        for (ServerId u = 0; u < ns; ++u)
        {
            const std::string name = g.server_group(u).empty() ? "all" : g.server_group(u);
            auto it = std::find_if(groups_.begin(), groups_.end(), [&](const Group &x) { return x.name == name; });
            if (it == groups_.end())
            {
                groups_.push_back({});
                groups_.back().name = name;
                it = groups_.end() - 1;
            }
            group_of_[u] = static_cast<std::size_t>(it - groups_.begin());
            it->members.push_back(u);
        }
        for (auto &grp : groups_)
        {
            grp.area_min_ge.assign(ks_.size(), 0.0);
            grp.min = std::numeric_limits<std::int64_t>::max();
            grp.max = 0;
            for (ServerId u : grp.members)
            {
                level_add(grp, x_[u]);
                grp.min = std::min(grp.min, x_[u]);
                grp.max = std::max(grp.max, x_[u]);
                grp.sum += x_[u];
            }
        }

        checkpoints_.resize(batches_ + 1);
        for (std::size_t i = 0; i <= batches_; ++i)
            checkpoints_[i] = ws_ + (we_ - ws_) * static_cast<double>(i) / static_cast<double>(batches_);
        checkpoints_.back() = we_;
    }

    double OccupancyRecorder::clip(double from, double to) const noexcept
    {
        return std::max(0.0, std::min(to, we_) - std::max(from, ws_));
    }

    void OccupancyRecorder::level_add(Group &grp, std::int64_t level)
    {
        const auto l = static_cast<std::size_t>(level);
        if (grp.level_count.size() <= l)
            grp.level_count.resize(l + 1, 0);
        ++grp.level_count[l];
    }

    void OccupancyRecorder::level_remove(Group &grp, std::int64_t level)
    {
        --grp.level_count[static_cast<std::size_t>(level)];
    }

    void OccupancyRecorder::flush_server(ServerId u, double t)
    {
        const double dt = clip(last_[u], t);
        last_[u] = t;
        if (dt == 0.0)
            return;
        const std::int64_t x = x_[u];
        area_[u] += dt * static_cast<double>(x);
        double *tail = area_tail_.data() + u * ks_.size();
        for (std::size_t i = 0; i < ks_.size() && x >= static_cast<std::int64_t>(ks_[i]); ++i)
            tail[i] += dt;
    }

    void OccupancyRecorder::flush_group(Group &grp, double t)
    {
        const double dt = clip(grp.last, t);
        grp.last = t;
        if (dt == 0.0)
            return;
        grp.area_min += dt * static_cast<double>(grp.min);
        grp.area_max += dt * static_cast<double>(grp.max);
        grp.area_sum += dt * static_cast<double>(grp.sum);
        for (std::size_t i = 0; i < ks_.size() && grp.min >= static_cast<std::int64_t>(ks_[i]); ++i)
            grp.area_min_ge[i] += dt;
    }

    void OccupancyRecorder::flush_all(double t)
    {
        for (ServerId u = 0; u < x_.size(); ++u)
            flush_server(u, t);
        for (auto &grp : groups_)
            flush_group(grp, t);
    }

    void OccupancyRecorder::snapshot()
    {
        std::vector<double> s(area_);
        for (const auto &grp : groups_)
        {
            s.push_back(grp.area_min);
            s.push_back(grp.area_sum);
        }
        snaps_.push_back(std::move(s));
    }

    void OccupancyRecorder::advance(double t)
    {
        while (next_checkpoint_ < checkpoints_.size() && checkpoints_[next_checkpoint_] <= t)
        {
            flush_all(checkpoints_[next_checkpoint_]);
            snapshot();
            ++next_checkpoint_;
        }
        if (trace_dt_ > 0.0)
            while (next_trace_ <= t && next_trace_ <= we_)
            {
                TracePoint p;
                p.time = next_trace_;
                for (const auto &grp : groups_)
                {
                    p.min.push_back(static_cast<double>(grp.min));
                    p.mean.push_back(static_cast<double>(grp.sum) / static_cast<double>(grp.members.size()));
                    p.max.push_back(static_cast<double>(grp.max));
                }
                trace_.push_back(std::move(p));
                next_trace_ = trace_dt_ * static_cast<double>(trace_.size());
            }
    }

    void OccupancyRecorder::change(ServerId u, std::int64_t delta, double t)
    {
        advance(t);
        flush_server(u, t);
        Group &grp = groups_[group_of_[u]];
        flush_group(grp, t);
        const std::int64_t old = x_[u];
        const std::int64_t now = old + delta;
        if (now < 0)
            throw InvariantBreach("server " + std::to_string(u) + " would hold a negative number of tasks");
        x_[u] = now;
        grp.sum += delta;
        level_remove(grp, old);
        level_add(grp, now);
        if (now < grp.min)
            grp.min = now;
        else if (old == grp.min)
            while (grp.level_count[static_cast<std::size_t>(grp.min)] == 0)
                ++grp.min;
        if (now > grp.max)
            grp.max = now;
        else if (old == grp.max)
            while (grp.level_count[static_cast<std::size_t>(grp.max)] == 0)
                --grp.max;
    }

    OccupancyMetrics OccupancyRecorder::finish(double t_end, bool partial)
    {
        advance(t_end);
        flush_all(t_end);

        OccupancyMetrics m;
        m.tail_ks = ks_;
        m.sim_time = t_end;
        m.partial = partial;
        m.window = clip(0.0, t_end);
        m.final_state = x_;
        m.trace = std::move(trace_);
        const std::size_t ns = x_.size();
        const double inv = m.window > 0.0 ? 1.0 / m.window : 0.0;

        m.batches = snaps_.empty() ? 0 : snaps_.size() - 1;
        const double batch_len = (we_ - ws_) / static_cast<double>(batches_);
        auto batch_se = [&](std::size_t col)
        {
            if (m.batches < 2)
                return std::numeric_limits<double>::quiet_NaN();
            std::vector<double> means(m.batches);
            for (std::size_t i = 1; i <= m.batches; ++i)
                means[i - 1] = (snaps_[i][col] - snaps_[i - 1][col]) / batch_len;
            return summarize(means).std_error;
        };

        m.mean_queue.resize(ns);
        m.mean_queue_se.resize(ns);
        m.tail.assign(ns, std::vector<double>(ks_.size(), 0.0));
        m.server_group.resize(ns);
        for (ServerId u = 0; u < ns; ++u)
        {
            m.mean_queue[u] = area_[u] * inv;
            m.mean_queue_se[u] = batch_se(u);
            m.server_group[u] = groups_[group_of_[u]].name;
            for (std::size_t i = 0; i < ks_.size(); ++i)
                m.tail[u][i] = area_tail_[u * ks_.size() + i] * inv;
        }

        for (std::size_t gi = 0; gi < groups_.size(); ++gi)
        {
            const Group &grp = groups_[gi];
            GroupSummary s;
            s.name = grp.name;
            s.size = grp.members.size();
            const double size = static_cast<double>(s.size);
            s.min_of_means = std::numeric_limits<double>::infinity();
            s.max_of_means = -std::numeric_limits<double>::infinity();
            for (ServerId u : grp.members)
            {
                s.min_of_means = std::min(s.min_of_means, m.mean_queue[u]);
                s.max_of_means = std::max(s.max_of_means, m.mean_queue[u]);
                s.mean_of_means += m.mean_queue[u] / size;
            }
            s.avg_min = grp.area_min * inv;
            s.avg_max = grp.area_max * inv;
            s.avg_mean = grp.area_sum * inv / size;
            s.avg_min_se = batch_se(ns + 2 * gi);
            s.avg_mean_se = batch_se(ns + 2 * gi + 1) / size;
            for (double a : grp.area_min_ge)
                s.min_at_least.push_back(a * inv);
            m.groups.push_back(std::move(s));
        }
        return m;
    }
}
