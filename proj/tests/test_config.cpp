#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skewnet/config.hpp"

#include <filesystem>
#include <fstream>

using namespace skewnet;
using nlohmann::json;

namespace
{
    // Path of the ConfigError raised by resolving `tree`, or "" when it resolves.
    std::string error_path(const json &tree)
    {
        try
        {
            resolve_config(tree);
        }
        catch (const ConfigError &e)
        {
            return e.path();
        }
        return "";
    }

    std::filesystem::path scratch_dir(const std::string &name)
    {
        auto p = std::filesystem::temp_directory_path() / ("skewnet_test_config_" + name);
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p;
    }
}

TEST_CASE("preset defaults carry the published parameters")
{
    const auto d = preset_defaults("dandelion-sweep");
    CHECK(d.dandelion.b == 3);
    CHECK(d.dandelion.c == 4);
    CHECK(d.dandelion.lambda == 2.85);
    CHECK(d.dandelion.mu == 1.0);
    CHECK(d.dandelion.n == std::vector<std::size_t>{4, 8, 16, 32, 64});
    CHECK(d.dandelion.seeds == 5);
    CHECK(d.sim.horizon == 2e4);
    CHECK(d.sim.policy == Policy::jsq());

    const auto c = preset_defaults("cdn");
    CHECK(c.cdn.clusters == 50);
    CHECK(c.cdn.edge_per_cluster == 10);
    CHECK(c.cdn.origin_count == 10);
    CHECK(c.cdn.rho == 0.9);
    CHECK(c.cdn.tier1_rate_multiplier == 5.0);
    CHECK(c.cdn.seeds == 3);
    CHECK(c.sim.horizon == 200.0);
    CHECK(c.sim.warmup == 0.75);

    const auto l = preset_defaults("cdn", "long");
    CHECK(l.cdn.clusters == 1000);
    CHECK(l.cdn.origin_count == 100);

    const auto rb = preset_defaults("random-bipartite-skew");
    CHECK(rb.random_bipartite.n == std::vector<std::size_t>{100, 1000, 10000});
    CHECK(rb.random_bipartite.b == 2.0);
    CHECK(rb.random_bipartite.a == 3);
    CHECK(rb.random_bipartite.seeds == 20);
    const auto er = preset_defaults("er-skew");
    CHECK(er.er.n == std::vector<std::size_t>{1000, 10000, 100000});
    CHECK(er.er.a == 2);

    for (const auto &name : preset_names())
        if (name != "custom")
            CHECK_NOTHROW(preset_defaults(name).validate());
    CHECK_THROWS_AS(preset_defaults("fig-9"), ConfigError);
    CHECK_THROWS_AS(preset_defaults("cdn", "huge"), ConfigError);
}

TEST_CASE("configs round-trip through their JSON form")
{
    for (const auto &name : preset_names())
        for (const char *tier : {"default", "long"})
        {
            auto c = preset_defaults(name, tier);
            c.seed = 0xfedcba9876543210ULL;
            c.sim.policy = Policy::power_of(2);
            c.sim.horizon = 0.1 + 0.2; // not exactly representable as written
            c.dandelion.lambda = 1.0 / 3.0;
            c.custom.family = "dandelion";
            c.custom.params = {{"b", 2}, {"lambda", 0.7}};
            c.custom.grid = {{"n", {2, 4}}, {"c", {0, 1}}};
            c.custom.replicas = 3;
            CAPTURE(name);
            CHECK(overlay(preset_defaults("custom"), to_json(c)) == c);
            CHECK(overlay(ExperimentConfig{}, json::parse(to_json(c).dump())) == c);
        }
}

TEST_CASE("resolved config file reproduces the config")
{
    const auto dir = scratch_dir("roundtrip");
    auto c = preset_defaults("cdn");
    c.seed = 99;
    c.cdn.clusters = 7;
    c.output_dir = (dir / "out").string();
    {
        std::ofstream out(dir / "resolved.json");
        out << to_json(c).dump(2);
    }
    CHECK(resolve_config(read_config_file(dir / "resolved.json")) == c);
}

TEST_CASE("TOML and its JSON mirror resolve to the same config")
{
    const std::string toml = R"(
preset = "dandelion-sweep"
seed = 42
threads = 2

[sim]
policy = "pod:2"
tail_ks = [1, 3]
horizon = 5e3

[dandelion]
n = [2, 4]
lambda = 1.9
b = 2
)";
    const json mirror = {{"preset", "dandelion-sweep"},
                         {"seed", 42},
                         {"threads", 2},
                         {"sim", {{"policy", "pod:2"}, {"tail_ks", {1, 3}}, {"horizon", 5e3}}},
                         {"dandelion", {{"n", {2, 4}}, {"lambda", 1.9}, {"b", 2}}}};
    const auto from_toml = resolve_config(parse_toml(toml));
    CHECK(from_toml == resolve_config(mirror));
    CHECK(from_toml.seed == 42);
    CHECK(from_toml.sim.policy == Policy::power_of(2));
    CHECK(from_toml.sim.horizon == 5e3);
    CHECK(from_toml.dandelion.n == std::vector<std::size_t>{2, 4});
    // Untouched fields keep the preset defaults.
    CHECK(from_toml.dandelion.c == 4);
    CHECK(from_toml.sim.warmup == 0.25);

    const auto dir = scratch_dir("toml");
    {
        std::ofstream out(dir / "cfg.toml");
        out << toml;
    }
    CHECK(resolve_config(read_config_file(dir / "cfg.toml")) == from_toml);
}

TEST_CASE("validation errors name the offending field")
{
    struct Case
    {
        json tree;
        std::string path;
    };
    const std::vector<Case> cases = {
        {{{"bogus", 1}}, "bogus"},
        {{{"preset", "nope"}}, "preset"},
        {{{"tier", "huge"}}, "tier"},
        {{{"seed", -1}}, "seed"},
        {{{"seed", 1.5}}, "seed"},
        {{{"threads", 0}}, "threads"},
        {{{"sim", {{"horizon", "long"}}}}, "sim.horizon"},
        {{{"sim", {{"horizon", 0}}}}, "sim.horizon"},
        {{{"sim", {{"warmup", 1.0}}}}, "sim.warmup"},
        {{{"sim", {{"policy", "pod:x"}}}}, "sim.policy"},
        {{{"sim", {{"tail_ks", {5, 3}}}}}, "sim.tail_ks[1]"},
        {{{"sim", {{"tail_ks", {0}}}}}, "sim.tail_ks[0]"},
        {{{"sim", {{"speed", 2}}}}, "sim.speed"},
        {{{"sim", 3}}, "sim"},
        {{{"dandelion", {{"n", {4, -8}}}}}, "dandelion.n[1]"},
        {{{"dandelion", {{"n", json::array()}}}}, "dandelion.n"},
        {{{"dandelion", {{"lambda", -2.0}}}}, "dandelion.lambda"},
        {{{"cdn", {{"rho", 1.5}}}}, "cdn.rho"},
        {{{"cdn", {{"seeds", 0}}}}, "cdn.seeds"},
        {{{"random_bipartite", {{"n", {1}}}}}, "random_bipartite.n[0]"},
        {{{"er", {{"n", {1000, 2}}}}}, "er.n[1]"},
        {{{"er", {{"b", 2}}}}, "er.b"},
        {{{"custom", {{"grid", {{"n", json::array()}}}}}}, "custom.grid.n"},
        {{{"custom", {{"family", "torus"}}}}, "custom.family"},
        {{{"preset", "custom"}}, "custom"},
        {{{"preset", "custom"}, {"custom", {{"graph", "g.json"}, {"family", "dandelion"}}}}, "custom"},
    };
    for (const auto &c : cases)
    {
        CAPTURE(c.tree.dump());
        CHECK(error_path(c.tree) == c.path);
    }
    CHECK(error_path({{"preset", "custom"}, {"custom", {{"family", "dandelion"}}}}) == "");
}

TEST_CASE("TOML syntax errors report a location")
{
    try
    {
        parse_toml("seed = \n[sim", "broken.toml");
        FAIL("expected a parse error");
    }
    catch (const ConfigError &e)
    {
        CHECK(e.path() == "broken.toml");
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_toml("when = 1979-05-27"), ConfigError);
    CHECK_THROWS_AS(read_config_file("/nonexistent/cfg.toml"), ConfigError);
}

TEST_CASE("assignments and merging")
{
    CHECK(parse_assignment("sim.horizon=100") == json{{"sim", {{"horizon", 100}}}});
    CHECK(parse_assignment("custom.family=dandelion") == json{{"custom", {{"family", "dandelion"}}}});
    CHECK(parse_assignment("dandelion.n=[1,2]") == json{{"dandelion", {{"n", {1, 2}}}}});
    CHECK(parse_assignment("sim.policy=pod:2") == json{{"sim", {{"policy", "pod:2"}}}});
    CHECK(parse_assignment("seed=7") == json{{"seed", 7}});
    CHECK_THROWS_AS(parse_assignment("=3"), ConfigError);
    CHECK_THROWS_AS(parse_assignment("sim..horizon=3"), ConfigError);
    CHECK_THROWS_AS(parse_assignment("horizon"), ConfigError);

    json tree = {{"sim", {{"horizon", 5}, {"warmup", 0.1}}}, {"seed", 1}};
    merge_into(tree, parse_assignment("sim.horizon=9"));
    merge_into(tree, parse_assignment("dandelion.b=2"));
    CHECK(tree == json{{"sim", {{"horizon", 9}, {"warmup", 0.1}}}, {"seed", 1}, {"dandelion", {{"b", 2}}}});
    // Arrays are replaced, not merged.
    merge_into(tree, json{{"sim", {{"tail_ks", {1}}}}});
    merge_into(tree, json{{"sim", {{"tail_ks", {2, 3}}}}});
    CHECK(tree["sim"]["tail_ks"] == json{2, 3});
}

TEST_CASE("integral floats are accepted as counts")
{
    const auto c = resolve_config({{"preset", "er-skew"}, {"er", {{"n", {1e3, 1e4}}, {"seeds", 4.0}}}});
    CHECK(c.er.n == std::vector<std::size_t>{1000, 10000});
    CHECK(c.er.seeds == 4);
    CHECK(error_path({{"er", {{"seeds", 4.5}}}}) == "er.seeds");
}

TEST_CASE("sim_config copies the run settings")
{
    auto c = preset_defaults("cdn");
    c.seed = 11;
    const auto s = c.sim_config();
    CHECK(s.horizon == c.sim.horizon);
    CHECK(s.warmup_fraction == c.sim.warmup);
    CHECK(s.seed == 11);
    CHECK(s.tail_ks == c.sim.tail_ks);
    CHECK(s.trace_interval == 1.0);
    CHECK_NOTHROW(s.validate());
}
