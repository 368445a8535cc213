#include "skewnet/presets.hpp"

#include "skewnet/exact.hpp"
#include "skewnet/generators.hpp"
#include "skewnet/graph_io.hpp"
#include "skewnet/stats.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef SKEWNET_VERSION
#define SKEWNET_VERSION "unknown"
#endif

namespace skewnet
{
    namespace
    {
        using nlohmann::json;

        // Reads params[key] into out when present; remembers the key as consumed.
        struct ParamReader
        {
            const json &params;
            const std::string &family;
            std::vector<std::string> used;

            template <class T>
            void get(const char *key, T &out)
            {
                used.emplace_back(key);
                auto it = params.find(key);
                if (it == params.end())
                    return;
                try
                {
                    if constexpr (std::is_same_v<T, std::size_t>)
                    {
                        if (it->is_number_float() && std::floor(it->get<double>()) == it->get<double>() &&
                            it->get<double>() >= 0.0)
                            out = static_cast<std::size_t>(it->get<double>());
                        else if (it->is_number_integer() && it->get<std::int64_t>() >= 0)
                            out = static_cast<std::size_t>(it->get<std::int64_t>());
                        else
                            throw DomainError("");
                    }
                    else if constexpr (std::is_same_v<T, bool>)
                    {
                        if (!it->is_boolean())
                            throw DomainError("");
                        out = it->get<bool>();
                    }
                    else
                    {
                        if (!it->is_number())
                            throw DomainError("");
                        out = it->get<double>();
                    }
                }
                catch (const DomainError &)
                {
                    throw DomainError(family + " parameter '" + key + "' has the wrong type: " + it->dump());
                }
            }

            void finish() const
            {
                if (!params.is_object())
                    throw DomainError(family + " parameters must be an object");
                for (const auto &[k, v] : params.items())
                    if (std::find(used.begin(), used.end(), k) == used.end())
                        throw DomainError("unknown " + family + " parameter '" + k + "'");
            }
        };

        double mean_of(const std::vector<double> &xs)
        {
            return summarize(xs).mean;
        }

        double se_of(const std::vector<double> &xs)
        {
            return summarize(xs).std_error;
        }

        const GroupSummary &group_or_throw(const OccupancyMetrics &m, const std::string &name)
        {
            const GroupSummary *g = m.group(name);
            if (!g)
                throw DomainError("metrics have no group '" + name + "'");
            return *g;
        }

        json run_provenance(const ExperimentConfig &cfg, const std::string &kind)
        {
            return {{"preset", cfg.preset},
                    {"output", kind},
                    {"policy", cfg.sim.policy.to_string()},
                    {"seed", cfg.seed},
                    {"config", to_json(cfg)}};
        }

        std::vector<json> replicate(const std::vector<json> &base, std::size_t replicas, std::uint64_t seed)
        {
            std::vector<json> points;
            for (const auto &p : base)
                for (std::size_t r = 0; r < replicas; ++r)
                {
                    json q = p;
                    q["replica"] = r;
                    q["seed"] = seed + points.size();
                    points.push_back(std::move(q));
                }
            return points;
        }

        json without_run_keys(json p)
        {
            p.erase("replica");
            p.erase("seed");
            return p;
        }
    }

    std::string code_version()
    {
        return std::string("skewnet ") + SKEWNET_VERSION;
    }

    CompatGraph build_family(const std::string &family, const nlohmann::json &params, std::uint64_t seed)
    {
        ParamReader r{params, family, {}};
        if (family == "dandelion")
        {
            DandelionSpec s;
            r.get("n", s.n);
            r.get("b", s.b);
            r.get("c", s.c);
            r.get("lambda", s.lambda);
            r.get("mu", s.mu);
            r.get("strict_ergodic", s.strict_ergodic);
            r.finish();
            return dandelion(s);
        }
        if (family == "cdn")
        {
            CdnSpec s;
            r.get("clusters", s.clusters);
            r.get("edge_per_cluster", s.edge_per_cluster);
            r.get("origin_count", s.origin_count);
            r.get("rho", s.rho);
            r.get("tier1_rate_multiplier", s.tier1_rate_multiplier);
            r.get("mu", s.mu);
            r.finish();
            return cdn_network(s);
        }
        if (family == "random-bipartite")
        {
            RandomBipartiteSpec s;
            s.seed = seed;
            r.get("n", s.n);
            r.get("b", s.b);
            r.get("stabilize", s.stabilize);
            r.get("lambda", s.lambda);
            r.get("mu", s.mu);
            r.finish();
            return random_bipartite(s);
        }
        if (family == "er")
        {
            ErSpec s;
            s.seed = seed;
            r.get("n", s.n);
            r.get("lambda", s.lambda);
            r.get("mu", s.mu);
            r.finish();
            json prov = {{"family", "er"},
                         {"params", {{"n", s.n}, {"lambda", s.lambda}, {"mu", s.mu}}},
                         {"seed", seed}};
            return to_bipartite(er_network(s), std::move(prov));
        }
        throw DomainError("unknown family '" + family + "'; expected dandelion, cdn, random-bipartite or er");
    }

    std::filesystem::path write_artifact(const std::filesystem::path &dir, const std::string &name,
                                         const std::string &content, const nlohmann::json &provenance)
    {
        std::filesystem::create_directories(dir);
        const auto path = dir / name;
        {
            std::ofstream out(path, std::ios::binary);
            out << content;
            if (!out)
                throw std::runtime_error("cannot write " + path.string());
        }
        json side = {{"file", name}, {"code_version", code_version()}};
        for (const auto &[k, v] : provenance.items())
            side[k] = v;
        std::ofstream out(dir / (name + ".json"), std::ios::binary);
        out << side.dump(2) << '\n';
        if (!out)
            throw std::runtime_error("cannot write " + (dir / (name + ".json")).string());
        return path;
    }

    DandelionSweepResult run_dandelion_sweep(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const auto &d = cfg.dandelion;
        std::vector<json> base;
        for (std::size_t n : d.n)
            base.push_back({{"n", n}});
        const auto points = replicate(base, d.seeds, cfg.seed);
        auto make = [&](const json &p)
        {
            return dandelion({.n = p.at("n").get<std::size_t>(), .b = d.b, .c = d.c, .lambda = d.lambda, .mu = d.mu});
        };

        DandelionSweepResult out;
        out.runs = sweep(make, points, cfg.sim.policy, cfg.sim_config(), cfg.threads);
        for (std::size_t i = 0; i < d.n.size(); ++i)
        {
            std::vector<double> boundary, central;
            for (std::size_t r = 0; r < d.seeds; ++r)
            {
                const auto &m = out.runs[i * d.seeds + r].metrics;
                boundary.push_back(group_or_throw(m, "boundary").avg_mean);
                // Without central servers the minimum over them is undefined.
                central.push_back(d.c > 0 ? group_or_throw(m, "central").avg_min
                                          : std::numeric_limits<double>::quiet_NaN());
            }
            out.points.push_back({d.n[i], d.seeds, mean_of(boundary), se_of(boundary), mean_of(central), se_of(central)});
        }
        out.reference = std::numeric_limits<double>::quiet_NaN();
        if (d.reference_cap > 0)
        {
            const auto law = basic_jsq_symmetric(d.b, d.lambda, d.mu, static_cast<unsigned>(d.reference_cap));
            out.reference = law.mean_queue;
            out.reference_boundary_mass = law.boundary_mass;
        }
        return out;
    }

    std::string dandelion_summary_csv(const DandelionSweepResult &r)
    {
        std::ostringstream out;
        out << "n,replicas,boundary_mean,boundary_mean_se,central_min,central_min_se,basic_reference\n";
        for (const auto &p : r.points)
            out << p.n << ',' << p.replicas << ',' << format_double(p.boundary_mean) << ','
                << format_double(p.boundary_mean_se) << ',' << format_double(p.central_min) << ','
                << format_double(p.central_min_se) << ',' << (std::isnan(r.reference) ? "" : format_double(r.reference))
                << '\n';
        return out.str();
    }

    std::vector<SweepRun> run_cdn(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const auto &c = cfg.cdn;
        const CompatGraph g = cdn_network({.clusters = c.clusters,
                                           .edge_per_cluster = c.edge_per_cluster,
                                           .origin_count = c.origin_count,
                                           .rho = c.rho,
                                           .tier1_rate_multiplier = c.tier1_rate_multiplier,
                                           .mu = c.mu});
        const auto points = replicate({json::object()}, c.seeds, cfg.seed);
        return sweep([&](const json &) { return g; }, points, cfg.sim.policy, cfg.sim_config(), cfg.threads);
    }

    std::string cdn_summary_csv(const std::vector<SweepRun> &runs)
    {
        std::ostringstream out;
        const auto &ks = runs.empty() ? std::vector<unsigned>{} : runs.front().metrics.tail_ks;
        out << "run_id,seed,edge_mean,origin_mean,origin_avg_min,origin_avg_max,ratio";
        for (unsigned k : ks)
            out << ",origin_min_ge_" << k;
        out << '\n';
        for (const auto &r : runs)
        {
            const auto &edge = group_or_throw(r.metrics, "edge");
            const GroupSummary *origin = r.metrics.group("origin");
            out << r.run_id << ',' << r.seed << ',' << format_double(edge.avg_mean);
            if (!origin)
            {
                // Origin-free layouts have nothing to compare.
                out << ",,,,";
                for (std::size_t i = 0; i < ks.size(); ++i)
                    out << ',';
                out << '\n';
                continue;
            }
            out << ',' << format_double(origin->avg_mean) << ',' << format_double(origin->avg_min) << ','
                << format_double(origin->avg_max) << ',' << format_double(origin->avg_mean / edge.avg_mean);
            for (double p : origin->min_at_least)
                out << ',' << format_double(p);
            out << '\n';
        }
        return out.str();
    }

    std::string trace_csv(const std::vector<SweepRun> &runs)
    {
        std::ostringstream out;
        out << "run_id,seed,time,group,min,mean,max\n";
        for (const auto &r : runs)
        {
            const auto &m = r.metrics;
            for (const auto &p : m.trace)
                for (std::size_t gi = 0; gi < m.groups.size(); ++gi)
                    out << r.run_id << ',' << r.seed << ',' << format_double(p.time) << ',' << m.groups[gi].name << ','
                        << format_double(p.min[gi]) << ',' << format_double(p.mean[gi]) << ','
                        << format_double(p.max[gi]) << '\n';
        }
        return out.str();
    }

    SkewGrowthResult run_skew_growth(const ExperimentConfig &cfg, const std::string &family)
    {
        cfg.validate();
        const bool bipartite = family == "random-bipartite";
        if (!bipartite && family != "er")
            throw DomainError("skew growth family must be random-bipartite or er");
        const SkewSection &s = bipartite ? cfg.random_bipartite : cfg.er;
        const SkewParams alpha{.a = s.a, .lambda_min = s.lambda, .mu_max = s.mu};

        SkewGrowthResult out;
        out.family = family;
        std::uint64_t index = 0;
        for (std::size_t n : s.n)
        {
            std::vector<double> sizes;
            for (std::size_t r = 0; r < s.seeds; ++r, ++index)
            {
                const std::uint64_t seed = cfg.seed + index;
                const CompatGraph g =
                    bipartite ? random_bipartite({.n = n, .b = s.b, .seed = seed, .stabilize = s.stabilize,
                                                  .lambda = s.lambda, .mu = s.mu})
                              : to_bipartite(er_network({.n = n, .seed = seed, .lambda = s.lambda, .mu = s.mu}));
                const ServerId u = max_degree_server(g);
                const std::size_t k = n_alpha(g, u, alpha).size();
                out.samples.push_back({n, r, seed, u, g.server_degree(u), k});
                sizes.push_back(static_cast<double>(k));
            }
            SkewPoint p{n, s.seeds, median(sizes), mean_of(sizes), 0, 0};
            p.min = static_cast<std::size_t>(*std::min_element(sizes.begin(), sizes.end()));
            p.max = static_cast<std::size_t>(*std::max_element(sizes.begin(), sizes.end()));
            out.points.push_back(p);
        }
        return out;
    }

    std::string skew_samples_csv(const SkewGrowthResult &r)
    {
        std::ostringstream out;
        out << "family,n,replica,seed,u_max,degree,n_alpha\n";
        for (const auto &s : r.samples)
            out << r.family << ',' << s.n << ',' << s.replica << ',' << s.seed << ',' << s.u_max << ',' << s.degree
                << ',' << s.n_alpha << '\n';
        return out.str();
    }

    std::string skew_summary_csv(const SkewGrowthResult &r)
    {
        std::ostringstream out;
        out << "family,n,replicas,median_n_alpha,mean_n_alpha,min_n_alpha,max_n_alpha\n";
        for (const auto &p : r.points)
            out << r.family << ',' << p.n << ',' << p.replicas << ',' << format_double(p.median) << ','
                << format_double(p.mean) << ',' << p.min << ',' << p.max << '\n';
        return out.str();
    }

    std::vector<SweepRun> run_custom(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const auto &c = cfg.custom;
        if (!c.graph.empty())
        {
            const CompatGraph g = load_graph(c.graph);
            const auto points = replicate({json::object()}, c.replicas, cfg.seed);
            return sweep([&](const json &) { return g; }, points, cfg.sim.policy, cfg.sim_config(), cfg.threads);
        }
        // Full product of the grid, last key varying fastest.
        std::vector<json> base = {c.params};
        for (const auto &[key, values] : c.grid.items())
        {
            std::vector<json> next;
            for (const auto &p : base)
                for (const auto &v : values)
                {
                    json q = p;
                    q[key] = v;
                    next.push_back(std::move(q));
                }
            base = std::move(next);
        }
        const auto points = replicate(base, c.replicas, cfg.seed);
        auto make = [&](const json &p) { return build_family(c.family, without_run_keys(p), p.at("seed").get<std::uint64_t>()); };
        return sweep(make, points, cfg.sim.policy, cfg.sim_config(), cfg.threads);
    }

    std::vector<std::filesystem::path> run_preset(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const std::filesystem::path dir = cfg.output_dir;
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> written;
        {
            std::ofstream out(dir / "config.resolved.json", std::ios::binary);
            out << to_json(cfg).dump(2) << '\n';
            if (!out)
                throw std::runtime_error("cannot write " + (dir / "config.resolved.json").string());
            written.push_back(dir / "config.resolved.json");
        }
        auto emit = [&](const std::string &name, const std::string &content, json prov)
        { written.push_back(write_artifact(dir, name, content, prov)); };
        auto csv = [](auto writer, const std::vector<SweepRun> &runs)
        {
            std::ostringstream s;
            writer(s, runs);
            return s.str();
        };

        if (cfg.preset == "dandelion-sweep")
        {
            const auto r = run_dandelion_sweep(cfg);
            json prov = run_provenance(cfg, "dandelion-sweep");
            prov["generator"] = {{"family", "dandelion"},
                                 {"params",
                                  {{"n", cfg.dandelion.n},
                                   {"b", cfg.dandelion.b},
                                   {"c", cfg.dandelion.c},
                                   {"lambda", cfg.dandelion.lambda},
                                   {"mu", cfg.dandelion.mu}}}};
            json summary = prov;
            summary["basic_reference"] = {{"cap", cfg.dandelion.reference_cap},
                                          {"mean_queue", std::isnan(r.reference) ? json(nullptr) : json(r.reference)},
                                          {"boundary_mass", r.reference_boundary_mass}};
            emit("dandelion_summary.csv", dandelion_summary_csv(r), summary);
            emit("dandelion_groups.csv", csv(write_group_csv, r.runs), prov);
            emit("dandelion_servers.csv", csv(write_server_csv, r.runs), prov);
        }
        else if (cfg.preset == "cdn")
        {
            const auto runs = run_cdn(cfg);
            json prov = run_provenance(cfg, "cdn");
            prov["generator"] = {{"family", "cdn"}, {"params", to_json(cfg)["cdn"]}};
            prov["generator"]["params"].erase("seeds");
            emit("cdn_summary.csv", cdn_summary_csv(runs), prov);
            emit("cdn_groups.csv", csv(write_group_csv, runs), prov);
            emit("cdn_servers.csv", csv(write_server_csv, runs), prov);
            if (cfg.sim.trace_interval > 0.0)
                emit("cdn_trace.csv", trace_csv(runs), prov);
        }
        else if (cfg.preset == "random-bipartite-skew" || cfg.preset == "er-skew")
        {
            const bool bipartite = cfg.preset == "random-bipartite-skew";
            const std::string family = bipartite ? "random-bipartite" : "er";
            const auto r = run_skew_growth(cfg, family);
            json prov = run_provenance(cfg, cfg.preset);
            prov.erase("policy"); // nothing is simulated
            const auto &s = bipartite ? cfg.random_bipartite : cfg.er;
            prov["generator"] = {{"family", family}, {"params", to_json(cfg)[bipartite ? "random_bipartite" : "er"]}};
            prov["alpha"] = {{"a", s.a}, {"lambda_min", s.lambda}, {"mu_max", s.mu}};
            const std::string stem = bipartite ? "random_bipartite" : "er";
            emit(stem + "_skew_summary.csv", skew_summary_csv(r), prov);
            emit(stem + "_skew_samples.csv", skew_samples_csv(r), prov);
        }
        else
        {
            const auto runs = run_custom(cfg);
            json prov = run_provenance(cfg, "custom");
            if (!cfg.custom.graph.empty())
                prov["generator"] = {{"graph_file", cfg.custom.graph},
                                     {"provenance", load_graph(cfg.custom.graph).provenance()}};
            else
                prov["generator"] = {
                    {"family", cfg.custom.family}, {"params", cfg.custom.params}, {"grid", cfg.custom.grid}};
            emit("servers.csv", csv(write_server_csv, runs), prov);
            emit("groups.csv", csv(write_group_csv, runs), prov);
            if (cfg.sim.trace_interval > 0.0)
                emit("trace.csv", trace_csv(runs), prov);
        }
        return written;
    }
}
