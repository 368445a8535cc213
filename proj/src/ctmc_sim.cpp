#include "skewnet/ctmc_sim.hpp"

#include "skewnet/errors.hpp"
#include "skewnet/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <queue>
#include <thread>

namespace skewnet
{
    Policy Policy::power_of(std::size_t d)
    {
        if (d < 1)
            throw DomainError("power-of-d policy needs d >= 1");
        return {Kind::power_of_d, d};
    }

    Policy Policy::parse(const std::string &text)
    {
        if (text == "jsq")
            return jsq();
        if (text.rfind("pod:", 0) == 0)
        {
            const std::string digits = text.substr(4);
            if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
                throw DomainError("policy '" + text + "': expected pod:<positive integer>");
            return power_of(std::stoul(digits));
        }
        throw DomainError("unknown policy '" + text + "'; expected jsq or pod:<d>");
    }

    std::string Policy::to_string() const
    {
        return kind == Kind::jsq ? "jsq" : "pod:" + std::to_string(d);
    }

    void SimConfig::validate() const
    {
        if (!(std::isfinite(horizon) && horizon > 0.0))
            throw DomainError("horizon must be finite and > 0");
        if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
            throw DomainError("warmup_fraction must lie in [0, 1)");
        if (batches < 1)
            throw DomainError("batches must be >= 1");
        if (!(std::isfinite(trace_interval) && trace_interval >= 0.0))
            throw DomainError("trace_interval must be finite and >= 0");
    }

    nlohmann::json to_json(const SimConfig &cfg)
    {
        return {{"horizon", cfg.horizon},     {"max_events", cfg.max_events},
                {"warmup_fraction", cfg.warmup_fraction}, {"seed", cfg.seed},
                {"tail_ks", cfg.tail_ks},     {"batches", cfg.batches},
                {"trace_interval", cfg.trace_interval}};
    }

    ServerId pick_least_loaded(std::span<const ServerId> candidates, const QueueState &x, Stream &rng)
    {
        std::int64_t best = x[candidates[0]];
        std::size_t ties = 0;
        for (ServerId u : candidates)
        {
            if (x[u] < best)
            {
                best = x[u];
                ties = 1;
            }
            else if (x[u] == best)
                ++ties;
        }
        std::size_t pick = rng.below(ties);
        for (ServerId u : candidates)
            if (x[u] == best && pick-- == 0)
                return u;
        return candidates[0];
    }

    void sample_subset(std::span<const ServerId> pool, std::size_t d, Stream &rng, std::vector<ServerId> &out)
    {
        out.assign(pool.begin(), pool.end());
        if (d >= out.size())
            return;
        for (std::size_t i = 0; i < d; ++i)
            std::swap(out[i], out[i + rng.below(out.size() - i)]);
        out.resize(d);
    }

    OccupancyMetrics simulate(const CompatGraph &g, const Policy &policy, const QueueState &x0, const SimConfig &cfg,
                              SimObserver *observer)
    {
        cfg.validate();
        if (policy.kind == Policy::Kind::power_of_d && policy.d < 1)
            throw DomainError("power-of-d policy needs d >= 1");

        const std::size_t nd = g.num_dispatchers();
        const std::size_t nb = g.num_blocks();
        OccupancyRecorder rec(g, x0, cfg.tail_ks, cfg.warmup_fraction * cfg.horizon, cfg.horizon, cfg.batches,
                              cfg.trace_interval);

        std::vector<Stream> arrive(nd), select(nd), depart(nb);
        for (DispatcherId d = 0; d < nd; ++d)
        {
            arrive[d] = Stream::derive(cfg.seed, streams::arrivals, d);
            select[d] = Stream::derive(cfg.seed, streams::selection, d);
        }
        for (std::size_t k = 0; k < nb; ++k)
            depart[k] = Stream::derive(cfg.seed, streams::departures, k);

        // Sources 0..nd-1 are arrival clocks, nd..nd+nb-1 block departure clocks.
        using Event = std::pair<double, std::size_t>;
        std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
        for (DispatcherId d = 0; d < nd; ++d)
            if (g.arrival_rate(d) > 0.0)
                queue.emplace(arrive[d].exponential(g.arrival_rate(d)), d);
        for (std::size_t k = 0; k < nb; ++k)
            queue.emplace(depart[k].exponential(g.service_rate(g.block(k)[0])), nd + k);

        std::uint64_t events = 0, arrivals = 0, departures = 0;
        bool partial = false;
        double now = 0.0;
        std::vector<ServerId> sample;
        while (!queue.empty())
        {
            const auto [t, src] = queue.top();
            if (t > cfg.horizon)
                break;
            if (cfg.max_events != 0 && events == cfg.max_events)
            {
                partial = true;
                break;
            }
            queue.pop();
            ++events;
            now = t;
            if (src < nd)
            {
                const DispatcherId d = src;
                std::span<const ServerId> cand = g.dispatcher_neighbors(d);
                if (policy.kind == Policy::Kind::power_of_d)
                {
                    sample_subset(cand, policy.d, select[d], sample);
                    cand = sample;
                }
                const ServerId u = pick_least_loaded(cand, rec.state(), select[d]);
                if (observer)
                    observer->on_arrival(t, d, cand, u, rec.state());
                rec.change(u, +1, t);
                ++arrivals;
                queue.emplace(t + arrive[d].exponential(g.arrival_rate(d)), src);
            }
            else
            {
                const std::size_t k = src - nd;
                if (observer)
                    observer->on_departure_tick(t, k);
                for (ServerId u : g.block(k))
                    if (rec[u] > 0)
                    {
                        rec.change(u, -1, t);
                        ++departures;
                        if (observer)
                            observer->on_departure(t, u);
                    }
                queue.emplace(t + depart[k].exponential(g.service_rate(g.block(k)[0])), src);
            }
        }

        OccupancyMetrics m = rec.finish(partial ? now : cfg.horizon, partial);
        m.events = events;
        m.arrivals = arrivals;
        m.departures = departures;
        return m;
    }

    std::vector<SweepRun> sweep(const std::function<CompatGraph(const nlohmann::json &)> &make_graph,
                                const std::vector<nlohmann::json> &points, const Policy &policy,
                                const SimConfig &cfg, std::size_t threads)
    {
        if (points.empty())
            throw DomainError("sweep needs at least one parameter point");
        cfg.validate();
        std::vector<SweepRun> runs(points.size());
        std::vector<std::exception_ptr> errors(points.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&]
        {
            for (std::size_t i = next++; i < points.size(); i = next++)
            {
                try
                {
                    SimConfig c = cfg;
                    c.seed = cfg.seed + i;
                    const CompatGraph g = make_graph(points[i]);
                    runs[i] = {i, points[i], c.seed, simulate(g, policy, {}, c)};
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, points.size());
        if (n_threads == 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < n_threads; ++t)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
        return runs;
    }

    OccupancyMetrics merge_metrics(const OccupancyMetrics &a, const OccupancyMetrics &b)
    {
        if (a.mean_queue.size() != b.mean_queue.size() || a.tail_ks != b.tail_ks ||
            a.server_group != b.server_group)
            throw DomainError("merge_metrics: runs describe different graphs or tail thresholds");
        const double w = a.window + b.window;
        const double wa = w > 0 ? a.window / w : 0.0;
        const double wb = w > 0 ? b.window / w : 0.0;
        auto mix = [&](double x, double y) { return wa * x + wb * y; };
        auto mix_se = [&](double x, double y) { return std::sqrt(wa * wa * x * x + wb * wb * y * y); };

        OccupancyMetrics m;
        m.tail_ks = a.tail_ks;
        m.server_group = a.server_group;
        const std::size_t ns = a.mean_queue.size();
        m.mean_queue.resize(ns);
        m.mean_queue_se.resize(ns);
        m.tail.assign(ns, std::vector<double>(a.tail_ks.size()));
        for (std::size_t u = 0; u < ns; ++u)
        {
            m.mean_queue[u] = mix(a.mean_queue[u], b.mean_queue[u]);
            m.mean_queue_se[u] = mix_se(a.mean_queue_se[u], b.mean_queue_se[u]);
            for (std::size_t i = 0; i < a.tail_ks.size(); ++i)
                m.tail[u][i] = mix(a.tail[u][i], b.tail[u][i]);
        }
        for (std::size_t gi = 0; gi < a.groups.size(); ++gi)
        {
            const auto &x = a.groups[gi];
            const auto &y = b.groups[gi];
            GroupSummary s;
            s.name = x.name;
            s.size = x.size;
            s.avg_min = mix(x.avg_min, y.avg_min);
            s.avg_mean = mix(x.avg_mean, y.avg_mean);
            s.avg_max = mix(x.avg_max, y.avg_max);
            s.avg_min_se = mix_se(x.avg_min_se, y.avg_min_se);
            s.avg_mean_se = mix_se(x.avg_mean_se, y.avg_mean_se);
            for (std::size_t i = 0; i < x.min_at_least.size(); ++i)
                s.min_at_least.push_back(mix(x.min_at_least[i], y.min_at_least[i]));
            s.min_of_means = std::numeric_limits<double>::infinity();
            s.max_of_means = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < ns; ++u)
                if (m.server_group[u] == s.name)
                {
                    s.min_of_means = std::min(s.min_of_means, m.mean_queue[u]);
                    s.max_of_means = std::max(s.max_of_means, m.mean_queue[u]);
                    s.mean_of_means += m.mean_queue[u] / static_cast<double>(s.size);
                }
            m.groups.push_back(std::move(s));
        }
        m.sim_time = a.sim_time + b.sim_time;
        m.window = w;
        m.batches = a.batches + b.batches;
        m.events = a.events + b.events;
        m.arrivals = a.arrivals + b.arrivals;
        m.departures = a.departures + b.departures;
        m.partial = a.partial || b.partial;
        return m;
    }

    namespace
    {
        std::string cell(const nlohmann::json &v)
        {
            if (v.is_number_float())
                return format_double(v.get<double>());
            if (v.is_string())
                return v.get<std::string>();
            return v.dump();
        }

        std::vector<std::string> param_columns(const std::vector<SweepRun> &runs)
        {
            std::vector<std::string> cols;
            for (const auto &r : runs)
                for (const auto &[k, v] : r.params.items())
                    if (std::find(cols.begin(), cols.end(), k) == cols.end())
                        cols.push_back(k);
            return cols;
        }

        void param_cells(std::ostream &out, const SweepRun &r, const std::vector<std::string> &cols)
        {
            for (const auto &c : cols)
                out << ',' << (r.params.contains(c) ? cell(r.params.at(c)) : std::string{});
        }
    }

    void write_server_csv(std::ostream &out, const std::vector<SweepRun> &runs)
    {
        const auto cols = param_columns(runs);
        const auto &ks = runs.empty() ? std::vector<unsigned>{} : runs.front().metrics.tail_ks;
        out << "run_id";
        for (const auto &c : cols)
            out << ',' << c;
        out << ",server_id,group,mean_queue";
        for (unsigned k : ks)
            out << ",p_ge_" << k;
        out << ",sim_time,events\n";
        for (const auto &r : runs)
        {
            const auto &m = r.metrics;
            for (std::size_t u = 0; u < m.mean_queue.size(); ++u)
            {
                out << r.run_id;
                param_cells(out, r, cols);
                out << ',' << u << ',' << m.server_group[u] << ',' << format_double(m.mean_queue[u]);
                for (double p : m.tail[u])
                    out << ',' << format_double(p);
                out << ',' << format_double(m.sim_time) << ',' << m.events << '\n';
            }
        }
    }

    void write_group_csv(std::ostream &out, const std::vector<SweepRun> &runs)
    {
        const auto cols = param_columns(runs);
        const auto &ks = runs.empty() ? std::vector<unsigned>{} : runs.front().metrics.tail_ks;
        out << "run_id";
        for (const auto &c : cols)
            out << ',' << c;
        out << ",group,size,min_of_means,mean_of_means,max_of_means,avg_min,avg_min_se,avg_mean,avg_mean_se,avg_max";
        for (unsigned k : ks)
            out << ",min_ge_" << k;
        out << ",sim_time,events\n";
        for (const auto &r : runs)
            for (const auto &s : r.metrics.groups)
            {
                out << r.run_id;
                param_cells(out, r, cols);
                out << ',' << s.name << ',' << s.size;
                for (double v : {s.min_of_means, s.mean_of_means, s.max_of_means, s.avg_min, s.avg_min_se, s.avg_mean,
                                 s.avg_mean_se, s.avg_max})
                    out << ',' << format_double(v);
                for (double p : s.min_at_least)
                    out << ',' << format_double(p);
                out << ',' << format_double(r.metrics.sim_time) << ',' << r.metrics.events << '\n';
            }
    }

    void write_trace_csv(std::ostream &out, const OccupancyMetrics &m)
    {
        out << "time,group,min,mean,max\n";
        for (const auto &p : m.trace)
            for (std::size_t gi = 0; gi < m.groups.size(); ++gi)
                out << format_double(p.time) << ',' << m.groups[gi].name << ',' << format_double(p.min[gi]) << ','
                    << format_double(p.mean[gi]) << ',' << format_double(p.max[gi]) << '\n';
    }
}
