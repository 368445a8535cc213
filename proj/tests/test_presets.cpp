#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skewnet/exact.hpp"
#include "skewnet/generators.hpp"
#include "skewnet/graph_io.hpp"
#include "skewnet/presets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace skewnet;
using nlohmann::json;

namespace
{
    std::filesystem::path scratch_dir(const std::string &name)
    {
        auto p = std::filesystem::temp_directory_path() / ("skewnet_test_presets_" + name);
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p;
    }

    std::string slurp(const std::filesystem::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    std::string first_line(const std::string &s) { return s.substr(0, s.find('\n')); }

    // Oracle for the skew statistic: plain scans, no library set operations.
    std::size_t brute_skew(const CompatGraph &g, std::size_t a, double lambda_min, double mu_max, ServerId &u_max)
    {
        u_max = 0;
        for (ServerId u = 1; u < g.num_servers(); ++u)
            if (g.server_degree(u) > g.server_degree(u_max))
                u_max = u;
        std::size_t count = 0;
        for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
        {
            bool touches = false, slow = true;
            for (ServerId v : g.dispatcher_neighbors(d))
            {
                touches = touches || v == u_max;
                slow = slow && g.service_rate(v) <= mu_max;
            }
            count += touches && slow && g.dispatcher_degree(d) <= a && g.arrival_rate(d) >= lambda_min;
        }
        return count;
    }

    ExperimentConfig small_dandelion()
    {
        auto c = preset_defaults("dandelion-sweep");
        c.dandelion = {.b = 2, .c = 1, .lambda = 1.5, .mu = 1.0, .n = {2, 4}, .seeds = 2, .reference_cap = 30};
        c.sim.horizon = 400.0;
        c.seed = 5;
        return c;
    }
}

TEST_CASE("build_family matches the generators")
{
    CHECK(build_family("dandelion", {{"n", 3}, {"b", 2}, {"c", 1}, {"lambda", 1.5}}, 0) ==
          dandelion({.n = 3, .b = 2, .c = 1, .lambda = 1.5}));
    CHECK(build_family("cdn", {{"clusters", 2}, {"origin_count", 3}}, 0) ==
          cdn_network({.clusters = 2, .origin_count = 3}));
    CHECK(build_family("random-bipartite", {{"n", 30}, {"b", 2}, {"stabilize", true}}, 17) ==
          random_bipartite({.n = 30, .b = 2, .seed = 17, .stabilize = true}));
    const auto er = build_family("er", {{"n", 200}}, 3);
    const auto direct = to_bipartite(er_network({.n = 200, .seed = 3}));
    CHECK(er.edges() == direct.edges());
    CHECK(er.provenance()["family"] == "er");
    CHECK(er.provenance()["seed"] == 3);

    // Float spellings of counts are accepted when integral.
    CHECK(build_family("dandelion", {{"n", 3.0}}, 0).num_dispatchers() == 3);
    CHECK_THROWS_AS(build_family("dandelion", {{"n", 2.5}}, 0), DomainError);
    CHECK_THROWS_AS(build_family("dandelion", {{"n", "three"}}, 0), DomainError);
    CHECK_THROWS_AS(build_family("dandelion", {{"radius", 1}}, 0), DomainError);
    CHECK_THROWS_AS(build_family("random-bipartite", {{"stabilize", 1}}, 0), DomainError);
    CHECK_THROWS_AS(build_family("torus", json::object(), 0), DomainError);
}

TEST_CASE("skew growth agrees with a brute-force scan")
{
    for (const char *family : {"random-bipartite", "er"})
    {
        auto c = preset_defaults(std::string(family) == "er" ? "er-skew" : "random-bipartite-skew");
        c.seed = 40;
        auto &s = std::string(family) == "er" ? c.er : c.random_bipartite;
        s.n = std::string(family) == "er" ? std::vector<std::size_t>{300, 600} : std::vector<std::size_t>{50, 200};
        s.seeds = 6;
        const auto r = run_skew_growth(c, family);
        REQUIRE(r.samples.size() == 12);
        REQUIRE(r.points.size() == 2);
        for (std::size_t i = 0; i < r.samples.size(); ++i)
        {
            const auto &x = r.samples[i];
            CAPTURE(family);
            CAPTURE(i);
            CHECK(x.seed == 40 + i);
            CHECK(x.n == s.n[i / 6]);
            CHECK(x.replica == i % 6);
            const CompatGraph g = std::string(family) == "er"
                                      ? to_bipartite(er_network({.n = x.n, .seed = x.seed, .lambda = s.lambda, .mu = s.mu}))
                                      : random_bipartite({.n = x.n, .b = s.b, .seed = x.seed, .lambda = s.lambda, .mu = s.mu});
            ServerId u = 0;
            CHECK(x.n_alpha == brute_skew(g, s.a, s.lambda, s.mu, u));
            CHECK(x.u_max == u);
            CHECK(x.degree == g.server_degree(u));
        }
        for (std::size_t p = 0; p < 2; ++p)
        {
            std::vector<double> v;
            for (std::size_t i = 0; i < 6; ++i)
                v.push_back(static_cast<double>(r.samples[p * 6 + i].n_alpha));
            std::sort(v.begin(), v.end());
            CHECK(r.points[p].median == (v[2] + v[3]) / 2);
            CHECK(r.points[p].min == v.front());
            CHECK(r.points[p].max == v.back());
        }
        const auto csv = skew_summary_csv(r);
        CHECK(first_line(csv) == "family,n,replicas,median_n_alpha,mean_n_alpha,min_n_alpha,max_n_alpha");
        CHECK(first_line(skew_samples_csv(r)) == "family,n,replica,seed,u_max,degree,n_alpha");
    }
    CHECK_THROWS_AS(run_skew_growth(preset_defaults("er-skew"), "cdn"), DomainError);
}

TEST_CASE("dandelion sweep summary is the replica average")
{
    const auto c = small_dandelion();
    const auto r = run_dandelion_sweep(c);
    REQUIRE(r.runs.size() == 4);
    REQUIRE(r.points.size() == 2);
    for (std::size_t i = 0; i < 4; ++i)
    {
        CHECK(r.runs[i].seed == 5 + i);
        CHECK(r.runs[i].params["n"] == c.dandelion.n[i / 2]);
        CHECK(r.runs[i].params["replica"] == i % 2);
    }
    for (std::size_t p = 0; p < 2; ++p)
    {
        const auto &m0 = r.runs[2 * p].metrics, &m1 = r.runs[2 * p + 1].metrics;
        CHECK(r.points[p].n == c.dandelion.n[p]);
        CHECK(r.points[p].boundary_mean ==
              doctest::Approx((m0.group("boundary")->avg_mean + m1.group("boundary")->avg_mean) / 2));
        CHECK(r.points[p].central_min ==
              doctest::Approx((m0.group("central")->avg_min + m1.group("central")->avg_min) / 2));
    }
    CHECK(r.reference == basic_jsq_symmetric(2, 1.5, 1.0, 30).mean_queue);
    CHECK(first_line(dandelion_summary_csv(r)) ==
          "n,replicas,boundary_mean,boundary_mean_se,central_min,central_min_se,basic_reference");

    auto no_ref = c;
    no_ref.dandelion.reference_cap = 0;
    CHECK(std::isnan(run_dandelion_sweep(no_ref).reference));
}

TEST_CASE("custom grids expand in key order")
{
    auto c = preset_defaults("custom");
    c.seed = 100;
    c.sim.horizon = 50.0;
    c.custom.family = "dandelion";
    c.custom.params = {{"b", 1}, {"lambda", 0.5}};
    c.custom.grid = {{"n", {1, 2}}, {"c", {0, 1}}};
    c.custom.replicas = 2;
    const auto runs = run_custom(c);
    REQUIRE(runs.size() == 8);
    // nlohmann keeps keys sorted, so c varies slowest.
    const std::vector<std::pair<int, int>> expect = {{0, 1}, {0, 1}, {0, 2}, {0, 2}, {1, 1}, {1, 1}, {1, 2}, {1, 2}};
    for (std::size_t i = 0; i < runs.size(); ++i)
    {
        CHECK(runs[i].params["c"] == expect[i].first);
        CHECK(runs[i].params["n"] == expect[i].second);
        CHECK(runs[i].params["b"] == 1);
        CHECK(runs[i].seed == 100 + i);
        CHECK(runs[i].metrics.mean_queue.size() == expect[i].first + expect[i].second);
    }

    auto bad = c;
    bad.custom.params["radius"] = 2;
    CHECK_THROWS_AS(run_custom(bad), DomainError);

    const auto dir = scratch_dir("custom_graph");
    save_graph(dir / "g.json", dandelion({.n = 2, .b = 1, .c = 1}));
    auto from_file = preset_defaults("custom");
    from_file.sim.horizon = 50.0;
    from_file.custom.graph = (dir / "g.json").string();
    from_file.custom.replicas = 3;
    const auto file_runs = run_custom(from_file);
    CHECK(file_runs.size() == 3);
    CHECK(file_runs[2].seed == from_file.seed + 2);
}

TEST_CASE("run_preset writes CSVs with provenance sidecars")
{
    const auto dir = scratch_dir("artifacts");
    auto c = small_dandelion();
    c.output_dir = (dir / "a").string();
    const auto files = run_preset(c);
    std::vector<std::string> names;
    for (const auto &f : files)
        names.push_back(f.filename().string());
    CHECK(names == std::vector<std::string>{"config.resolved.json", "dandelion_summary.csv", "dandelion_groups.csv",
                                            "dandelion_servers.csv"});
    CHECK(resolve_config(json::parse(slurp(dir / "a" / "config.resolved.json"))) == c);
    for (const char *csv : {"dandelion_summary.csv", "dandelion_groups.csv", "dandelion_servers.csv"})
    {
        CAPTURE(csv);
        const auto side = json::parse(slurp(dir / "a" / (std::string(csv) + ".json")));
        CHECK(side["file"] == csv);
        CHECK(side["code_version"] == code_version());
        CHECK(side["seed"] == 5);
        CHECK(side["policy"] == "jsq");
        CHECK(side["generator"]["family"] == "dandelion");
        CHECK(side["generator"]["params"]["b"] == 2);
    }
    const std::string servers = slurp(dir / "a" / "dandelion_servers.csv");
    CHECK(first_line(servers) == "run_id,n,replica,seed,server_id,group,mean_queue,p_ge_1,p_ge_5,p_ge_10,sim_time,events");

    // Same resolved config, same bytes; another seed changes the numbers but not the schema.
    auto again = c;
    again.output_dir = (dir / "b").string();
    run_preset(again);
    auto other = c;
    other.output_dir = (dir / "c").string();
    other.seed = 6;
    run_preset(other);
    for (const char *csv : {"dandelion_summary.csv", "dandelion_groups.csv", "dandelion_servers.csv"})
    {
        CAPTURE(csv);
        const auto a = slurp(dir / "a" / csv), b = slurp(dir / "b" / csv), d = slurp(dir / "c" / csv);
        CHECK(a == b);
        CHECK(a != d);
        CHECK(first_line(a) == first_line(d));
    }
}

TEST_CASE("cdn preset emits summary and trace")
{
    const auto dir = scratch_dir("cdn");
    auto c = preset_defaults("cdn");
    c.cdn.clusters = 3;
    c.cdn.origin_count = 2;
    c.cdn.seeds = 2;
    c.sim.horizon = 40.0;
    c.output_dir = dir.string();
    run_preset(c);
    const std::string summary = slurp(dir / "cdn_summary.csv");
    CHECK(first_line(summary) ==
          "run_id,seed,edge_mean,origin_mean,origin_avg_min,origin_avg_max,ratio,origin_min_ge_1,origin_min_ge_7,"
          "origin_min_ge_8");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
    const std::string trace = slurp(dir / "cdn_trace.csv");
    CHECK(first_line(trace) == "run_id,seed,time,group,min,mean,max");
    // Points at t = 0, 1, ..., 40 for two groups and two seeds.
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 2 * 2 * 41);
    CHECK(std::filesystem::exists(dir / "cdn_trace.csv.json"));

    // Origin-free layout: the comparison columns stay empty.
    auto bare = c;
    bare.cdn.origin_count = 0;
    bare.output_dir = (dir / "bare").string();
    run_preset(bare);
    const std::string bare_summary = slurp(dir / "bare" / "cdn_summary.csv");
    CHECK(bare_summary.find(",,,,") != std::string::npos);
}
