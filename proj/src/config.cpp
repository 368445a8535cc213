#include "skewnet/config.hpp"

#include "skewnet/generators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

namespace skewnet
{
    namespace
    {
        using nlohmann::json;

        std::string join(const std::string &path, const std::string &key)
        {
            return path.empty() ? key : path + "." + key;
        }

        void known_keys(const json &j, const std::string &path, std::initializer_list<const char *> keys)
        {
            if (!j.is_object())
                throw ConfigError(path.empty() ? "<root>" : path, "expected a table");
            for (const auto &[k, v] : j.items())
                if (std::none_of(keys.begin(), keys.end(), [&](const char *x) { return k == x; }))
                    throw ConfigError(join(path, k), "unknown field");
        }

        double as_double(const json &v, const std::string &path)
        {
            if (!v.is_number())
                throw ConfigError(path, "expected a number");
            return v.get<double>();
        }

        std::uint64_t as_u64(const json &v, const std::string &path)
        {
            if (v.is_number_unsigned())
                return v.get<std::uint64_t>();
            if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
                return static_cast<std::uint64_t>(v.get<std::int64_t>());
            if (v.is_number_float())
            {
                const double x = v.get<double>();
                // 2e4 style counts are fine when integral.
                if (x >= 0.0 && x < 0x1p64 && std::floor(x) == x)
                    return static_cast<std::uint64_t>(x);
            }
            throw ConfigError(path, "expected a nonnegative integer, got " + v.dump());
        }

        std::size_t as_count(const json &v, const std::string &path) { return static_cast<std::size_t>(as_u64(v, path)); }

        std::string as_string(const json &v, const std::string &path)
        {
            if (!v.is_string())
                throw ConfigError(path, "expected a string");
            return v.get<std::string>();
        }

        bool as_bool(const json &v, const std::string &path)
        {
            if (!v.is_boolean())
                throw ConfigError(path, "expected true or false");
            return v.get<bool>();
        }

        template <class T, class F>
        std::vector<T> as_list(const json &v, const std::string &path, F one)
        {
            if (!v.is_array())
                throw ConfigError(path, "expected an array");
            std::vector<T> out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out.push_back(static_cast<T>(one(v[i], path + "[" + std::to_string(i) + "]")));
            return out;
        }

        // Calls f(value, path) when key is present.
        template <class F>
        void field(const json &j, const std::string &path, const char *key, F f)
        {
            if (auto it = j.find(key); it != j.end())
                f(*it, join(path, key));
        }

        void read_sim(SimSection &s, const json &j, const std::string &p)
        {
            known_keys(j, p, {"policy", "horizon", "warmup", "tail_ks", "batches", "max_events", "trace_interval"});
            field(j, p, "policy",
                  [&](const json &v, const std::string &q)
                  {
                      try
                      {
                          s.policy = Policy::parse(as_string(v, q));
                      }
                      catch (const ConfigError &)
                      {
                          throw;
                      }
                      catch (const DomainError &e)
                      {
                          throw ConfigError(q, e.what());
                      }
                  });
            field(j, p, "horizon", [&](const json &v, const std::string &q) { s.horizon = as_double(v, q); });
            field(j, p, "warmup", [&](const json &v, const std::string &q) { s.warmup = as_double(v, q); });
            field(j, p, "tail_ks",
                  [&](const json &v, const std::string &q)
                  {
                      s.tail_ks = as_list<unsigned>(v, q,
                                                    [](const json &x, const std::string &r)
                                                    {
                                                        const auto k = as_u64(x, r);
                                                        if (k > std::numeric_limits<unsigned>::max())
                                                            throw ConfigError(r, "threshold too large");
                                                        return k;
                                                    });
                  });
            field(j, p, "batches", [&](const json &v, const std::string &q) { s.batches = as_count(v, q); });
            field(j, p, "max_events", [&](const json &v, const std::string &q) { s.max_events = as_u64(v, q); });
            field(j, p, "trace_interval", [&](const json &v, const std::string &q) { s.trace_interval = as_double(v, q); });
        }

        std::vector<std::size_t> count_list(const json &v, const std::string &q)
        {
            return as_list<std::size_t>(v, q, as_count);
        }

        void read_dandelion(DandelionSection &s, const json &j, const std::string &p)
        {
            known_keys(j, p, {"b", "c", "lambda", "mu", "n", "seeds", "reference_cap"});
            field(j, p, "b", [&](const json &v, const std::string &q) { s.b = as_count(v, q); });
            field(j, p, "c", [&](const json &v, const std::string &q) { s.c = as_count(v, q); });
            field(j, p, "lambda", [&](const json &v, const std::string &q) { s.lambda = as_double(v, q); });
            field(j, p, "mu", [&](const json &v, const std::string &q) { s.mu = as_double(v, q); });
            field(j, p, "n", [&](const json &v, const std::string &q) { s.n = count_list(v, q); });
            field(j, p, "seeds", [&](const json &v, const std::string &q) { s.seeds = as_count(v, q); });
            field(j, p, "reference_cap", [&](const json &v, const std::string &q) { s.reference_cap = as_count(v, q); });
        }

        void read_cdn(CdnSection &s, const json &j, const std::string &p)
        {
            known_keys(j, p, {"clusters", "edge_per_cluster", "origin_count", "rho", "tier1_rate_multiplier", "mu", "seeds"});
            field(j, p, "clusters", [&](const json &v, const std::string &q) { s.clusters = as_count(v, q); });
            field(j, p, "edge_per_cluster", [&](const json &v, const std::string &q) { s.edge_per_cluster = as_count(v, q); });
            field(j, p, "origin_count", [&](const json &v, const std::string &q) { s.origin_count = as_count(v, q); });
            field(j, p, "rho", [&](const json &v, const std::string &q) { s.rho = as_double(v, q); });
            field(j, p, "tier1_rate_multiplier",
                  [&](const json &v, const std::string &q) { s.tier1_rate_multiplier = as_double(v, q); });
            field(j, p, "mu", [&](const json &v, const std::string &q) { s.mu = as_double(v, q); });
            field(j, p, "seeds", [&](const json &v, const std::string &q) { s.seeds = as_count(v, q); });
        }

        void read_skew(SkewSection &s, const json &j, const std::string &p, bool bipartite)
        {
            if (bipartite)
                known_keys(j, p, {"n", "b", "stabilize", "seeds", "a", "lambda", "mu"});
            else
                known_keys(j, p, {"n", "seeds", "a", "lambda", "mu"});
            field(j, p, "n", [&](const json &v, const std::string &q) { s.n = count_list(v, q); });
            field(j, p, "b", [&](const json &v, const std::string &q) { s.b = as_double(v, q); });
            field(j, p, "stabilize", [&](const json &v, const std::string &q) { s.stabilize = as_bool(v, q); });
            field(j, p, "seeds", [&](const json &v, const std::string &q) { s.seeds = as_count(v, q); });
            field(j, p, "a", [&](const json &v, const std::string &q) { s.a = as_count(v, q); });
            field(j, p, "lambda", [&](const json &v, const std::string &q) { s.lambda = as_double(v, q); });
            field(j, p, "mu", [&](const json &v, const std::string &q) { s.mu = as_double(v, q); });
        }

        void read_custom(CustomSection &s, const json &j, const std::string &p)
        {
            known_keys(j, p, {"graph", "family", "params", "grid", "replicas"});
            field(j, p, "graph", [&](const json &v, const std::string &q) { s.graph = as_string(v, q); });
            field(j, p, "family", [&](const json &v, const std::string &q) { s.family = as_string(v, q); });
            field(j, p, "params",
                  [&](const json &v, const std::string &q)
                  {
                      if (!v.is_object())
                          throw ConfigError(q, "expected a table");
                      merge_into(s.params, v);
                  });
            field(j, p, "grid",
                  [&](const json &v, const std::string &q)
                  {
                      if (!v.is_object())
                          throw ConfigError(q, "expected a table");
                      for (const auto &[k, xs] : v.items())
                          if (!xs.is_array() || xs.empty())
                              throw ConfigError(join(q, k), "expected a nonempty array");
                      merge_into(s.grid, v);
                  });
            field(j, p, "replicas", [&](const json &v, const std::string &q) { s.replicas = as_count(v, q); });
        }

        json sim_json(const SimSection &s)
        {
            return {{"policy", s.policy.to_string()}, {"horizon", s.horizon},       {"warmup", s.warmup},
                    {"tail_ks", s.tail_ks},           {"batches", s.batches},       {"max_events", s.max_events},
                    {"trace_interval", s.trace_interval}};
        }

        json skew_json(const SkewSection &s, bool bipartite)
        {
            json j = {{"n", s.n}, {"seeds", s.seeds}, {"a", s.a}, {"lambda", s.lambda}, {"mu", s.mu}};
            if (bipartite)
            {
                j["b"] = s.b;
                j["stabilize"] = s.stabilize;
            }
            return j;
        }

        void positive(double x, const std::string &path)
        {
            if (!(std::isfinite(x) && x > 0.0))
                throw ConfigError(path, "must be finite and > 0");
        }

        void at_least_one(std::size_t x, const std::string &path)
        {
            if (x < 1)
                throw ConfigError(path, "must be >= 1");
        }

        void nonempty_counts(const std::vector<std::size_t> &xs, const std::string &path)
        {
            if (xs.empty())
                throw ConfigError(path, "must not be empty");
            for (std::size_t i = 0; i < xs.size(); ++i)
                at_least_one(xs[i], path + "[" + std::to_string(i) + "]");
        }

        void validate_skew(const SkewSection &s, const std::string &p, bool bipartite)
        {
            nonempty_counts(s.n, p + ".n");
            at_least_one(s.seeds, p + ".seeds");
            at_least_one(s.a, p + ".a");
            positive(s.lambda, p + ".lambda");
            positive(s.mu, p + ".mu");
            if (bipartite)
            {
                positive(s.b, p + ".b");
                for (std::size_t i = 0; i < s.n.size(); ++i)
                    if (static_cast<double>(s.n[i]) < s.b)
                        throw ConfigError(p + ".n[" + std::to_string(i) + "]", "must be >= b");
            }
            else
                for (std::size_t i = 0; i < s.n.size(); ++i)
                {
                    const double q = er_edge_probability(s.n[i]);
                    if (!(q > 0.0 && q < 1.0))
                        throw ConfigError(p + ".n[" + std::to_string(i) + "]",
                                          "edge probability log(log n)/(2(n-1)) is outside (0, 1)");
                }
        }

        const std::vector<std::string> families = {"dandelion", "cdn", "random-bipartite", "er"};
    }

    const std::vector<std::string> &preset_names()
    {
        static const std::vector<std::string> names = {"dandelion-sweep", "cdn", "random-bipartite-skew", "er-skew",
                                                       "custom"};
        return names;
    }

    ExperimentConfig preset_defaults(const std::string &preset, const std::string &tier)
    {
        const auto &names = preset_names();
        if (std::find(names.begin(), names.end(), preset) == names.end())
            throw ConfigError("preset", "unknown preset '" + preset + "'");
        if (tier != "default" && tier != "long")
            throw ConfigError("tier", "expected default or long");
        ExperimentConfig c;
        c.preset = preset;
        c.tier = tier;
        c.random_bipartite.n = {100, 1000, 10000};
        c.random_bipartite.a = 3;
        c.er.n = {1000, 10000, 100000};
        c.er.a = 2;
        if (tier == "long")
        {
            c.cdn.clusters = 1000;
            c.cdn.origin_count = 100;
            c.random_bipartite.n.push_back(100000);
            c.er.n.push_back(1000000);
        }
        if (preset == "dandelion-sweep")
            c.sim.horizon = 2e4;
        else if (preset == "cdn")
        {
            // Averages over the last quarter of [0, 200], one trace point per time unit.
            c.sim.horizon = 200.0;
            c.sim.warmup = 0.75;
            c.sim.trace_interval = 1.0;
            c.sim.tail_ks = {1, 7, 8};
        }
        return c;
    }

    void ExperimentConfig::validate() const
    {
        preset_defaults(preset, tier); // checks both names
        if (output_dir.empty())
            throw ConfigError("output_dir", "must not be empty");
        at_least_one(threads, "threads");

        positive(sim.horizon, "sim.horizon");
        if (!(sim.warmup >= 0.0 && sim.warmup < 1.0))
            throw ConfigError("sim.warmup", "must lie in [0, 1)");
        at_least_one(sim.batches, "sim.batches");
        if (!(std::isfinite(sim.trace_interval) && sim.trace_interval >= 0.0))
            throw ConfigError("sim.trace_interval", "must be finite and >= 0");
        for (std::size_t i = 0; i < sim.tail_ks.size(); ++i)
        {
            const std::string q = "sim.tail_ks[" + std::to_string(i) + "]";
            if (sim.tail_ks[i] < 1)
                throw ConfigError(q, "must be >= 1");
            if (i > 0 && sim.tail_ks[i] <= sim.tail_ks[i - 1])
                throw ConfigError(q, "thresholds must be strictly increasing");
        }

        at_least_one(dandelion.b, "dandelion.b");
        positive(dandelion.lambda, "dandelion.lambda");
        positive(dandelion.mu, "dandelion.mu");
        nonempty_counts(dandelion.n, "dandelion.n");
        at_least_one(dandelion.seeds, "dandelion.seeds");

        at_least_one(cdn.clusters, "cdn.clusters");
        at_least_one(cdn.edge_per_cluster, "cdn.edge_per_cluster");
        if (!(cdn.rho > 0.0 && cdn.rho < 1.0))
            throw ConfigError("cdn.rho", "must lie in (0, 1)");
        positive(cdn.tier1_rate_multiplier, "cdn.tier1_rate_multiplier");
        positive(cdn.mu, "cdn.mu");
        at_least_one(cdn.seeds, "cdn.seeds");

        validate_skew(random_bipartite, "random_bipartite", true);
        validate_skew(er, "er", false);

        at_least_one(custom.replicas, "custom.replicas");
        if (!custom.family.empty() && std::find(families.begin(), families.end(), custom.family) == families.end())
            throw ConfigError("custom.family", "unknown family '" + custom.family + "'");
        if (preset == "custom" && custom.graph.empty() == custom.family.empty())
            throw ConfigError("custom", "set exactly one of graph and family");
        if (!custom.graph.empty() && !custom.grid.empty())
            throw ConfigError("custom.grid", "a grid needs a generator family, not a graph file");
    }

    SimConfig ExperimentConfig::sim_config() const
    {
        SimConfig c;
        c.horizon = sim.horizon;
        c.max_events = sim.max_events;
        c.warmup_fraction = sim.warmup;
        c.seed = seed;
        c.tail_ks = sim.tail_ks;
        c.batches = sim.batches;
        c.trace_interval = sim.trace_interval;
        return c;
    }

    nlohmann::json to_json(const ExperimentConfig &c)
    {
        return {
            {"preset", c.preset},
            {"tier", c.tier},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"threads", c.threads},
            {"sim", sim_json(c.sim)},
            {"dandelion",
             {{"b", c.dandelion.b},
              {"c", c.dandelion.c},
              {"lambda", c.dandelion.lambda},
              {"mu", c.dandelion.mu},
              {"n", c.dandelion.n},
              {"seeds", c.dandelion.seeds},
              {"reference_cap", c.dandelion.reference_cap}}},
            {"cdn",
             {{"clusters", c.cdn.clusters},
              {"edge_per_cluster", c.cdn.edge_per_cluster},
              {"origin_count", c.cdn.origin_count},
              {"rho", c.cdn.rho},
              {"tier1_rate_multiplier", c.cdn.tier1_rate_multiplier},
              {"mu", c.cdn.mu},
              {"seeds", c.cdn.seeds}}},
            {"random_bipartite", skew_json(c.random_bipartite, true)},
            {"er", skew_json(c.er, false)},
            {"custom",
             {{"graph", c.custom.graph},
              {"family", c.custom.family},
              {"params", c.custom.params},
              {"grid", c.custom.grid},
              {"replicas", c.custom.replicas}}},
        };
    }

    ExperimentConfig overlay(ExperimentConfig c, const nlohmann::json &j)
    {
        known_keys(j, "",
                   {"preset", "tier", "seed", "output_dir", "threads", "sim", "dandelion", "cdn", "random_bipartite", "er",
                    "custom"});
        field(j, "", "preset", [&](const json &v, const std::string &q) { c.preset = as_string(v, q); });
        field(j, "", "tier", [&](const json &v, const std::string &q) { c.tier = as_string(v, q); });
        field(j, "", "seed", [&](const json &v, const std::string &q) { c.seed = as_u64(v, q); });
        field(j, "", "output_dir", [&](const json &v, const std::string &q) { c.output_dir = as_string(v, q); });
        field(j, "", "threads", [&](const json &v, const std::string &q) { c.threads = as_count(v, q); });
        field(j, "", "sim", [&](const json &v, const std::string &q) { read_sim(c.sim, v, q); });
        field(j, "", "dandelion", [&](const json &v, const std::string &q) { read_dandelion(c.dandelion, v, q); });
        field(j, "", "cdn", [&](const json &v, const std::string &q) { read_cdn(c.cdn, v, q); });
        field(j, "", "random_bipartite",
              [&](const json &v, const std::string &q) { read_skew(c.random_bipartite, v, q, true); });
        field(j, "", "er", [&](const json &v, const std::string &q) { read_skew(c.er, v, q, false); });
        field(j, "", "custom", [&](const json &v, const std::string &q) { read_custom(c.custom, v, q); });
        return c;
    }

    namespace
    {
        json toml_to_json(const toml::node &node, const std::string &path)
        {
            if (const auto *t = node.as_table())
            {
                json out = json::object();
                for (const auto &[k, v] : *t)
                    out[std::string(k.str())] = toml_to_json(v, join(path, std::string(k.str())));
                return out;
            }
            if (const auto *a = node.as_array())
            {
                json out = json::array();
                for (std::size_t i = 0; i < a->size(); ++i)
                    out.push_back(toml_to_json(*a->get(i), path + "[" + std::to_string(i) + "]"));
                return out;
            }
            if (const auto *s = node.as_string())
                return s->get();
            if (const auto *i = node.as_integer())
            {
                // Nonnegative integers stay unsigned so counts read back as counts.
                const std::int64_t x = i->get();
                return x >= 0 ? json(static_cast<std::uint64_t>(x)) : json(x);
            }
            if (const auto *f = node.as_floating_point())
                return f->get();
            if (const auto *b = node.as_boolean())
                return b->get();
            throw ConfigError(path.empty() ? "<root>" : path, "dates and times are not supported");
        }
    }

    nlohmann::json parse_toml(const std::string &text, const std::string &source)
    {
        toml::table t;
        try
        {
            t = toml::parse(text, source);
        }
        catch (const toml::parse_error &e)
        {
            std::ostringstream msg;
            msg << "TOML parse error at line " << e.source().begin.line << ", column " << e.source().begin.column
                << ": " << e.description();
            throw ConfigError(source, msg.str());
        }
        return toml_to_json(t, "");
    }

    nlohmann::json read_config_file(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError(path.string(), "cannot open config file");
        std::stringstream buf;
        buf << in.rdbuf();
        if (path.extension() == ".json")
        {
            try
            {
                return json::parse(buf.str());
            }
            catch (const json::parse_error &e)
            {
                throw ConfigError(path.string(), std::string("JSON parse error: ") + e.what());
            }
        }
        return parse_toml(buf.str(), path.string());
    }

    nlohmann::json parse_assignment(const std::string &text)
    {
        const auto eq = text.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(text, "expected key.path=value");
        const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded())
            value = raw;
        std::vector<std::string> parts;
        std::stringstream ks(key);
        for (std::string part; std::getline(ks, part, '.');)
        {
            if (part.empty())
                throw ConfigError(key, "empty path component");
            parts.push_back(part);
        }
        for (auto it = parts.rbegin(); it != parts.rend(); ++it)
            value = json{{*it, std::move(value)}};
        return value;
    }

    void merge_into(nlohmann::json &target, const nlohmann::json &patch)
    {
        if (!patch.is_object() || !target.is_object())
        {
            target = patch;
            return;
        }
        for (const auto &[k, v] : patch.items())
        {
            if (target.contains(k))
                merge_into(target[k], v);
            else
                target[k] = v;
        }
    }

    ExperimentConfig resolve_config(const nlohmann::json &tree)
    {
        if (!tree.is_object())
            throw ConfigError("<root>", "expected a table");
        std::string preset = "custom", tier = "default";
        if (auto it = tree.find("preset"); it != tree.end())
            preset = as_string(*it, "preset");
        if (auto it = tree.find("tier"); it != tree.end())
            tier = as_string(*it, "tier");
        ExperimentConfig c = overlay(preset_defaults(preset, tier), tree);
        c.validate();
        return c;
    }
}
