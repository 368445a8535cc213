// Acceptance run: one PASS/FAIL line per primary criterion.
//
//   acceptance            default tier, exit 1 on any failure not listed in known_shortfalls
//   acceptance --long     adds the 1000-cluster CDN run
//   acceptance --only X   runs the criteria whose name contains X
//
// Known shortfalls still print FAIL; they do not change the exit status. A known shortfall
// that starts passing prints PASS like any other line.
#include "coupling_fixtures.hpp"
#include "skewnet/config.hpp"
#include "skewnet/coupling.hpp"
#include "skewnet/ctmc_sim.hpp"
#include "skewnet/exact.hpp"
#include "skewnet/generators.hpp"
#include "skewnet/presets.hpp"
#include "skewnet/stats.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace skewnet;
using namespace testing_support;

namespace
{
    // Tolerances, pinned.
    constexpr double drift_tol = 1e-8;
    constexpr double geometric_tol = 1e-9;
    constexpr double sim_sigmas = 3.0;
    constexpr double exact_slack = 1e-9;
    constexpr double tv_slack = 1e-3;
    constexpr double chi2_p_min = 1e-3;
    constexpr double pod_ci_level = 0.99;
    constexpr double sweep_spearman_min = 0.9;
    constexpr double sweep_reference_rel = 0.05;
    constexpr double cdn_long_ratio = 3.0;
    constexpr double cdn_long_ge7 = 0.995;

    constexpr double drift_budget_s = 60.0;
    constexpr double min_rate_budget_s = 300.0;
    constexpr double coupling_budget_s = 600.0;
    constexpr double sweep_budget_s = 1200.0;

    // See the decisions log: both are resolution limits of the published setup at desk scale.
    const std::set<std::string> known_shortfalls = {"dandelion-sweep", "skew-growth"};

    struct Outcome
    {
        bool pass = true;
        std::ostringstream detail;

        void require(bool ok, const std::string &what)
        {
            pass = pass && ok;
            if (!ok)
                detail << " [" << what << "]";
        }
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    std::string fmt(double x, int prec = 4)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        return buf;
    }

    CompatGraph mm1(double lambda, double mu) { return make_graph(1, 1, {{0, 0}}, {lambda}, {mu}); }

    // dandelion(n,1,1) at K=10 for n = 2, 3, 4 feeds three criteria; solve it once.
    const std::vector<ConvergenceRow> &small_dandelion_rows()
    {
        static const auto rows = check_theorem2_convergence({2, 3, 4}, 1, 1, 0.95, 1.0, 10);
        return rows;
    }
    double small_dandelion_seconds = 0.0;

    void drift_identities(Outcome &o)
    {
        const auto t0 = Clock::now();
        struct Case
        {
            const char *name;
            CompatGraph g;
            unsigned K;
        };
        const Case cases[] = {
            {"M/M/1", mm1(1.0, 2.0), 100},
            {"basic b=2", dandelion({.n = 1, .b = 2, .c = 0, .lambda = 1.5}), 40},
            {"dandelion(2,1,1)", dandelion({.n = 2, .b = 1, .c = 1, .lambda = 0.95}), 12},
        };
        for (const auto &c : cases)
        {
            const auto chain = build_generator(c.g, c.K);
            const auto pi = stationary(chain);
            double worst = 0.0;
            for (std::uint64_t seed = 0; seed < 20; ++seed)
                worst = std::max(worst, check_zero_mean_drift(chain, pi, random_bounded_function(chain, seed)));
            o.detail << " " << c.name << " max|E[Af]|=" << fmt(worst, 2);
            o.require(worst < drift_tol, std::string(c.name) + " drift");
        }
        const double s = seconds_since(t0);
        o.detail << " time=" << fmt(s, 3) << "s";
        o.require(s < drift_budget_s, "runtime");
    }

    void mm1_oracle(Outcome &o)
    {
        const double rho = 0.5;
        const auto chain = build_generator(mm1(1.0, 2.0), 100);
        const auto pi = stationary(chain);
        double worst = 0.0;
        for (int k = 0; k <= 50; ++k)
            worst = std::max(worst, std::abs(pi.pi[k] - (1 - rho) * std::pow(rho, k)));
        o.detail << " max|pi-geom|=" << fmt(worst, 2);
        o.require(worst < geometric_tol, "geometric law");

        SimConfig cfg;
        cfg.horizon = 1e5;
        cfg.seed = 1;
        const auto m = simulate(mm1(0.5, 1.0), Policy::jsq(), {}, cfg);
        const double z = std::abs(m.mean_queue[0] - 1.0) / m.mean_queue_se[0];
        o.detail << " sim mean=" << fmt(m.mean_queue[0]) << " se=" << fmt(m.mean_queue_se[0], 2) << " |z|=" << fmt(z, 3);
        o.require(z <= sim_sigmas, "simulated mean");
    }

    void min_rate(Outcome &o)
    {
        const auto t0 = Clock::now();
        const auto &rows = small_dandelion_rows();
        small_dandelion_seconds = seconds_since(t0);
        for (const auto &r : rows)
        {
            bool all = true;
            for (const auto &m : r.min_rate)
                all = all && m.holds;
            double worst_p = 0.0;
            for (double p : r.p_central_min)
                worst_p = std::max(worst_p, p);
            o.detail << " n=" << r.n << " max P(c in M)=" << fmt(worst_p) << " <= " << fmt(r.central_bound);
            o.require(all, "min-rate n=" + std::to_string(r.n));
            o.require(worst_p <= r.central_bound + exact_slack, "central bound n=" + std::to_string(r.n));
        }
        o.detail << " time=" << fmt(small_dandelion_seconds, 3) << "s";
        o.require(small_dandelion_seconds < min_rate_budget_s, "runtime");
    }

    void convergence_trend(Outcome &o)
    {
        const auto &rows = small_dandelion_rows();
        o.detail << " marginal TV";
        for (const auto &r : rows)
            o.detail << " " << fmt(r.marginal_tv);
        o.detail << "; joint TV";
        for (const auto &r : rows)
            o.detail << " " << fmt(r.joint_tv);
        for (std::size_t i = 1; i < rows.size(); ++i)
        {
            // Decreasing, allowing the stated slack for truncation error.
            o.require(rows[i].marginal_tv < rows[i - 1].marginal_tv + tv_slack, "marginal n=" + std::to_string(rows[i].n));
            o.require(rows[i].joint_tv < rows[i - 1].joint_tv + tv_slack, "joint n=" + std::to_string(rows[i].n));
        }
    }

    void central_hit_bound(Outcome &o)
    {
        auto rows = small_dandelion_rows();
        for (const auto &r : check_theorem2_convergence({2}, 1, 1, 0.95, 1.0, 12))
            rows.push_back(r);
        for (const auto &r : rows)
        {
            o.detail << " n=" << r.n << " E[M]=" << fmt(r.expected_m) << " <= " << fmt(r.m_bound);
            o.require(r.expected_m <= r.m_bound + exact_slack, "n=" + std::to_string(r.n));
        }
    }

    void coupling(Outcome &o)
    {
        const auto t0 = Clock::now();
        const auto g = five_dispatcher_graph();
        const auto alpha = five_dispatcher_alpha();
        const auto core = find_skewed_core(g, 0, alpha);
        const auto plan = build_dandelion_lower_bound(g, core.servers, core.dispatchers, alpha);

        std::vector<std::pair<std::string, std::vector<TransformOp>>> cases;
        for (const auto &[name, op] : single_ops())
            cases.push_back({name, {op}});
        cases.push_back({"pipeline", plan.ops});

        for (const auto &[name, ops] : cases)
        {
            std::uint64_t bad = 0, events = 0;
            for (std::uint64_t seed = 0; seed < 100; ++seed)
            {
                SimConfig cfg;
                cfg.horizon = 1e300;
                cfg.max_events = 10'000;
                cfg.warmup_fraction = 0.0;
                cfg.tail_ks = {1};
                cfg.seed = seed;
                const auto run = coupled_simulate(g, ops, {}, cfg);
                bad += run.report.violations;
                events += run.report.events;
            }
            o.detail << " " << name << "=" << bad;
            o.require(bad == 0 && events >= 100 * 10'000, name);
        }

        std::uint64_t seed = 7;
        for (const auto &sc : dispatch_scenarios())
        {
            const auto counts = run_dispatch(sc, 100'000, seed++);
            const double p = std::min(counts.p_first, counts.p_second);
            o.detail << " chi2 p(" << sc.name << ")=" << fmt(p, 3);
            o.require(p > chi2_p_min, sc.name);
        }
        const double s = seconds_since(t0);
        o.detail << " time=" << fmt(s, 3) << "s";
        o.require(s < coupling_budget_s, "runtime");
    }

    void power_of_d(Outcome &o)
    {
        const auto g = make_graph(1, 3, {{0, 0}, {0, 1}, {0, 2}}, {2.4}, {1.0, 1.0, 1.0});
        const auto expanded = pod_expand(g, 2);
        std::vector<std::vector<double>> pod(3), jsq(3);
        for (std::uint64_t s = 0; s < 30; ++s)
        {
            SimConfig a, b;
            a.horizon = b.horizon = 2000.0;
            a.seed = 1000 + s;
            b.seed = 5000 + s;
            const auto ma = simulate(g, Policy::power_of(2), {}, a);
            const auto mb = simulate(expanded, Policy::jsq(), {}, b);
            for (ServerId u = 0; u < 3; ++u)
            {
                pod[u].push_back(ma.mean_queue[u]);
                jsq[u].push_back(mb.mean_queue[u]);
            }
        }
        for (ServerId u = 0; u < 3; ++u)
        {
            const auto x = summarize(pod[u]), y = summarize(jsq[u]);
            const double hx = t_half_width(x, pod_ci_level), hy = t_half_width(y, pod_ci_level);
            o.detail << " u" << u << " " << fmt(x.mean) << "+-" << fmt(hx, 2) << " vs " << fmt(y.mean) << "+-"
                     << fmt(hy, 2);
            o.require(std::abs(x.mean - y.mean) <= hx + hy, "server " + std::to_string(u));
        }
    }

    void dandelion_sweep(Outcome &o)
    {
        const auto t0 = Clock::now();
        const auto r = run_dandelion_sweep(preset_defaults("dandelion-sweep"));
        const double s = seconds_since(t0);

        std::vector<double> ns, central;
        for (const auto &p : r.points)
        {
            ns.push_back(static_cast<double>(p.n));
            central.push_back(p.central_min);
        }
        const double rho = spearman_rho(ns, central);
        o.detail << " spearman=" << fmt(rho, 3);
        o.require(rho > sweep_spearman_min, "spearman");
        for (const auto &p : r.points)
            if (p.n >= 16)
            {
                o.detail << " n=" << p.n << " central_min=" << fmt(p.central_min) << " boundary=" << fmt(p.boundary_mean);
                o.require(p.central_min > p.boundary_mean, "central above boundary n=" + std::to_string(p.n));
            }
        const auto &last = r.points.back();
        const double rel = std::abs(last.boundary_mean - r.reference) / r.reference;
        o.detail << " n=" << last.n << " boundary=" << fmt(last.boundary_mean) << " reference=" << fmt(r.reference)
                 << " rel=" << fmt(rel, 3);
        o.require(rel <= sweep_reference_rel, "boundary within 5% of reference");
        o.detail << " time=" << fmt(s, 3) << "s";
        o.require(s < sweep_budget_s, "runtime");
    }

    void cdn_check(Outcome &o, const std::string &tier)
    {
        const auto cfg = preset_defaults("cdn", tier);
        const auto runs = run_cdn(cfg);
        for (const auto &r : runs)
        {
            const auto *edge = r.metrics.group("edge");
            const auto *origin = r.metrics.group("origin");
            const double ratio = origin->avg_mean / edge->avg_mean;
            o.detail << " seed " << r.seed << ": origin=" << fmt(origin->avg_mean) << " edge=" << fmt(edge->avg_mean);
            o.require(origin->avg_mean > edge->avg_mean, "seed " + std::to_string(r.seed));
            if (tier == "long")
            {
                // Fraction of the window with every origin at 7 or more.
                const auto &ks = r.metrics.tail_ks;
                const auto k7 = std::find(ks.begin(), ks.end(), 7u) - ks.begin();
                const double ge7 = origin->min_at_least.at(static_cast<std::size_t>(k7));
                o.detail << " ratio=" << fmt(ratio, 3) << " min>=7=" << fmt(ge7, 4);
                o.require(ratio > cdn_long_ratio, "ratio seed " + std::to_string(r.seed));
                o.require(ge7 > cdn_long_ge7, "min>=7 seed " + std::to_string(r.seed));
            }
        }
    }

    void skew_growth(Outcome &o)
    {
        for (const char *family : {"random-bipartite", "er"})
        {
            const auto r = run_skew_growth(
                preset_defaults(std::string(family) == "er" ? "er-skew" : "random-bipartite-skew"), family);
            o.detail << " " << family << " medians";
            bool increasing = true;
            for (std::size_t i = 0; i < r.points.size(); ++i)
            {
                o.detail << " " << fmt(r.points[i].median);
                if (i > 0)
                    increasing = increasing && r.points[i].median > r.points[i - 1].median;
            }
            o.require(increasing, std::string(family) + " strictly increasing");
        }
    }

    std::string slurp(const std::filesystem::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    void determinism(Outcome &o)
    {
        const auto root = std::filesystem::temp_directory_path() / "skewnet_acceptance_determinism";
        std::filesystem::remove_all(root);

        auto dand = preset_defaults("dandelion-sweep");
        dand.dandelion.n = {4, 8};
        dand.dandelion.seeds = 2;
        dand.sim.horizon = 2000.0;
        auto cdn = preset_defaults("cdn");
        auto er = preset_defaults("er-skew");
        er.er.n = {1000, 10000};
        er.er.seeds = 4;

        std::size_t files = 0;
        for (const auto &cfg : {dand, cdn, er})
        {
            // A first run, a rerun from its resolved file, and the same on two threads.
            std::vector<std::filesystem::path> dirs;
            auto first = cfg;
            first.output_dir = (root / (cfg.preset + "_0")).string();
            run_preset(first);
            dirs.emplace_back(first.output_dir);
            for (std::size_t threads : {1, 2})
            {
                auto again = resolve_config(read_config_file(dirs[0] / "config.resolved.json"));
                again.threads = threads;
                again.output_dir = (root / (cfg.preset + "_" + std::to_string(dirs.size()))).string();
                run_preset(again);
                dirs.emplace_back(again.output_dir);
            }
            for (const auto &entry : std::filesystem::directory_iterator(dirs[0]))
            {
                if (entry.path().extension() != ".csv")
                    continue;
                ++files;
                const auto name = entry.path().filename();
                const auto ref = slurp(entry.path());
                for (std::size_t i = 1; i < dirs.size(); ++i)
                    o.require(slurp(dirs[i] / name) == ref, cfg.preset + "/" + name.string());
            }
        }
        o.detail << " " << files << " CSV files compared across repeats and thread counts";
        o.require(files >= 8, "too few files");
        std::filesystem::remove_all(root);
    }
}

int main(int argc, char **argv)
{
    bool long_tier = false;
    std::string only;
    for (int i = 1; i < argc; ++i)
    {
        const std::string a = argv[i];
        if (a == "--long")
            long_tier = true;
        else if (a == "--only" && i + 1 < argc)
            only = argv[++i];
        else
        {
            std::cerr << "usage: acceptance [--long] [--only NAME]\n";
            return 2;
        }
    }

    std::vector<std::pair<std::string, std::function<void(Outcome &)>>> criteria = {
        {"drift-identities", drift_identities},
        {"mm1-oracle", mm1_oracle},
        {"min-rate", min_rate},
        {"convergence-trend", convergence_trend},
        {"central-hit-bound", central_hit_bound},
        {"coupling-dominance", coupling},
        {"power-of-d", power_of_d},
        {"dandelion-sweep", dandelion_sweep},
        {"cdn", [](Outcome &o) { cdn_check(o, "default"); }},
        {"skew-growth", skew_growth},
        {"determinism", determinism},
    };
    if (long_tier)
        criteria.push_back({"cdn-long", [](Outcome &o) { cdn_check(o, "long"); }});

    // ctest hides the output of passing tests, so keep a copy next to the binary's working dir.
    std::ofstream report("acceptance_report.txt");
    int unexpected = 0, failed = 0, passed = 0;
    for (const auto &[name, run] : criteria)
    {
        if (!only.empty() && name.find(only) == std::string::npos)
            continue;
        Outcome o;
        try
        {
            run(o);
        }
        catch (const std::exception &e)
        {
            o.require(false, std::string("threw: ") + e.what());
        }
        const bool known = known_shortfalls.count(name) > 0;
        const std::string line = std::string(o.pass ? "PASS " : "FAIL ") + name + ":" + o.detail.str() +
                                 (!o.pass && known ? " (known shortfall)" : "");
        std::cout << line << std::endl;
        report << line << '\n';
        if (o.pass)
            ++passed;
        else
        {
            ++failed;
            unexpected += !known;
        }
    }
    const std::string tally = std::to_string(passed) + " passed, " + std::to_string(failed) + " failed, " +
                              std::to_string(unexpected) + " unexpected";
    std::cout << tally << std::endl;
    report << tally << '\n';
    return unexpected == 0 ? 0 : 1;
}
