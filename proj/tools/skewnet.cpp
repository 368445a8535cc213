// Command-line entry point. Exit codes: 0 success, 2 validation, 3 invariant breach,
// 4 resource cap, 1 anything else (I/O, solver failure).
#include "skewnet/config.hpp"
#include "skewnet/coupling.hpp"
#include "skewnet/exact.hpp"
#include "skewnet/generators.hpp"
#include "skewnet/graph_io.hpp"
#include "skewnet/presets.hpp"
#include "skewnet/stats.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

using namespace skewnet;
using nlohmann::json;

namespace
{
    enum Exit
    {
        ok = 0,
        failure = 1,
        validation = 2,
        breach = 3,
        resource = 4,
    };

    // "n=5,b=3,lambda=2.85" into a JSON object; values are JSON when they parse, else strings.
    json parse_params(const std::vector<std::string> &items)
    {
        json out = json::object();
        for (const auto &item : items)
        {
            std::stringstream ss(item);
            for (std::string kv; std::getline(ss, kv, ',');)
            {
                if (kv.empty())
                    continue;
                const auto eq = kv.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw DomainError("--params: expected key=value, got '" + kv + "'");
                json v = json::parse(kv.substr(eq + 1), nullptr, false);
                out[kv.substr(0, eq)] = v.is_discarded() ? json(kv.substr(eq + 1)) : v;
            }
        }
        return out;
    }

    void write_json(const std::string &path, const json &j, const json &provenance)
    {
        const std::filesystem::path p(path);
        write_artifact(p.parent_path().empty() ? "." : p.parent_path(), p.filename().string(), j.dump(2) + "\n",
                       provenance);
    }

    std::string slurp_csv(void (*writer)(std::ostream &, const std::vector<SweepRun> &),
                          const std::vector<SweepRun> &runs)
    {
        std::ostringstream s;
        writer(s, runs);
        return s.str();
    }

    void write_file(const std::string &path, const std::string &content, const json &provenance)
    {
        const std::filesystem::path p(path);
        write_artifact(p.parent_path().empty() ? "." : p.parent_path(), p.filename().string(), content, provenance);
    }

    // --- generate ---------------------------------------------------------------------------

    struct GenerateArgs
    {
        std::string family;
        std::vector<std::string> params;
        std::uint64_t seed = 0;
        std::string input;
        std::string output;
    };

    int run_generate(const GenerateArgs &a)
    {
        const json params = parse_params(a.params);
        CompatGraph g;
        if (a.family == "pod-expand" || a.family == "remove-central")
        {
            if (a.input.empty())
                throw DomainError(a.family + " needs an input graph (-g)");
            const CompatGraph in = load_graph(a.input);
            if (a.family == "remove-central")
            {
                if (!params.empty())
                    throw DomainError("remove-central takes no parameters");
                g = remove_central(in);
            }
            else
            {
                for (const auto &[k, v] : params.items())
                    if (k != "d")
                        throw DomainError("unknown pod-expand parameter '" + k + "'");
                if (!params.contains("d") || !params["d"].is_number_unsigned() || params["d"].get<std::size_t>() < 1)
                    throw DomainError("pod-expand needs d=<positive integer>");
                g = pod_expand(in, params["d"].get<std::size_t>());
            }
        }
        else
        {
            if (!a.input.empty())
                throw DomainError(a.family + " does not read an input graph");
            g = build_family(a.family, params, a.seed);
        }
        json prov = {{"command", "generate"}, {"family", a.family}, {"params", params}, {"seed", a.seed}};
        if (!a.input.empty())
            prov["input"] = a.input;
        write_json(a.output, graph_to_json(g), prov);
        std::cout << "wrote " << a.output << ": " << g.num_dispatchers() << " dispatchers, " << g.num_servers()
                  << " servers, " << g.num_edges() << " edges\n";
        return ok;
    }

    // --- simulate ---------------------------------------------------------------------------

    struct SimulateArgs
    {
        std::string graph;
        std::string policy = "jsq";
        double horizon = 1e4;
        double warmup = 0.25;
        std::uint64_t seed = 1;
        std::vector<unsigned> tail_ks = {1, 5, 10};
        std::size_t batches = 20;
        std::uint64_t max_events = 0;
        double trace_interval = 0.0;
        std::size_t replicas = 1;
        std::size_t threads = 1;
        std::string output = "metrics.csv";
        std::string groups;
        std::string trace;
    };

    int run_simulate(const SimulateArgs &a)
    {
        ExperimentConfig cfg = preset_defaults("custom");
        cfg.seed = a.seed;
        cfg.threads = a.threads;
        cfg.output_dir = std::filesystem::path(a.output).parent_path().string();
        if (cfg.output_dir.empty())
            cfg.output_dir = ".";
        cfg.sim.policy = Policy::parse(a.policy);
        cfg.sim.horizon = a.horizon;
        cfg.sim.warmup = a.warmup;
        cfg.sim.tail_ks = a.tail_ks;
        cfg.sim.batches = a.batches;
        cfg.sim.max_events = a.max_events;
        cfg.sim.trace_interval = a.trace_interval;
        cfg.custom.graph = a.graph;
        cfg.custom.replicas = a.replicas;
        cfg.validate();

        const auto runs = run_custom(cfg);
        const json prov = {{"command", "simulate"},
                           {"policy", cfg.sim.policy.to_string()},
                           {"seed", cfg.seed},
                           {"generator", load_graph(a.graph).provenance()},
                           {"graph_file", a.graph},
                           {"config", to_json(cfg)}};
        write_file(a.output, slurp_csv(write_server_csv, runs), prov);
        if (!a.groups.empty())
            write_file(a.groups, slurp_csv(write_group_csv, runs), prov);
        if (!a.trace.empty())
            write_file(a.trace, trace_csv(runs), prov);
        for (const auto &r : runs)
            if (r.metrics.partial)
                std::cerr << "warning: run " << r.run_id << " hit the event cap at t=" << r.metrics.sim_time << "\n";
        std::cout << "wrote " << a.output << " (" << runs.size() << " run" << (runs.size() == 1 ? "" : "s") << ")\n";
        return ok;
    }

    // --- preset / sweep ---------------------------------------------------------------------

    struct RunArgs
    {
        std::string preset;
        std::string config;
        std::vector<std::string> set;
        std::string tier;
        std::string output_dir;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> threads;
    };

    ExperimentConfig resolve(const RunArgs &a)
    {
        json tree = a.config.empty() ? json::object() : read_config_file(a.config);
        if (!tree.is_object())
            throw ConfigError("<root>", "expected a table");
        if (!a.preset.empty())
        {
            if (tree.contains("preset") && tree["preset"] != a.preset)
                throw ConfigError("preset", "config file names '" + tree["preset"].dump() + "' but the command asks for '" +
                                                a.preset + "'");
            tree["preset"] = a.preset;
        }
        for (const auto &s : a.set)
            merge_into(tree, parse_assignment(s));
        if (!a.tier.empty())
            tree["tier"] = a.tier;
        if (!a.output_dir.empty())
            tree["output_dir"] = a.output_dir;
        if (a.seed)
            tree["seed"] = *a.seed;
        if (a.threads)
            tree["threads"] = *a.threads;
        return resolve_config(tree);
    }

    int run_experiment(const RunArgs &a)
    {
        const ExperimentConfig cfg = resolve(a);
        const auto files = run_preset(cfg);
        for (const auto &f : files)
            std::cout << "wrote " << f.string() << "\n";
        return ok;
    }

    // --- couple -----------------------------------------------------------------------------

    struct CoupleArgs
    {
        std::string graph;
        std::string ops;
        std::uint64_t events = 10'000;
        std::size_t seeds = 1;
        std::uint64_t seed = 1;
        double horizon = 1e300;
        std::string output = "couple.json";
    };

    int run_couple(const CoupleArgs &a)
    {
        const CompatGraph g = load_graph(a.graph);
        std::ifstream in(a.ops);
        if (!in)
            throw DomainError("cannot open ops file " + a.ops);
        json ops_json;
        try
        {
            ops_json = json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw DomainError(a.ops + ": " + e.what());
        }
        const auto ops = transforms_from_json(ops_json);
        if (a.seeds < 1)
            throw DomainError("--seeds must be >= 1");

        json per_seed = json::array();
        std::uint64_t violations = 0, events = 0;
        for (std::size_t i = 0; i < a.seeds; ++i)
        {
            SimConfig cfg;
            cfg.horizon = a.horizon;
            cfg.max_events = a.events;
            cfg.seed = a.seed + i;
            cfg.tail_ks = {1};
            const auto run = coupled_simulate(g, ops, {}, cfg);
            violations += run.report.violations;
            events += run.report.events;
            json s = to_json(run.report);
            s["seed"] = cfg.seed;
            per_seed.push_back(std::move(s));
        }
        const json report = {{"violations", violations}, {"events", events}, {"seeds", per_seed}, {"ops", ops_json}};
        const json prov = {{"command", "couple"},
                           {"policy", "jsq"},
                           {"seed", a.seed},
                           {"generator", g.provenance()},
                           {"graph_file", a.graph},
                           {"ops_file", a.ops},
                           {"events_per_seed", a.events},
                           {"seeds", a.seeds}};
        write_json(a.output, report, prov);
        std::cout << "wrote " << a.output << ": " << violations << " dominance violations over " << events
                  << " events\n";
        return violations == 0 ? ok : breach;
    }

    // --- exact ------------------------------------------------------------------------------

    struct ExactArgs
    {
        std::string graph;
        unsigned K = 12;
        std::vector<std::string> checks = {"drift", "minrate"};
        std::vector<std::size_t> n_list = {2, 3, 4};
        std::size_t functions = 20;
        std::uint64_t seed = 1;
        std::string output = "exact.json";
    };

    json min_rate_json(const MinRateCheck &m)
    {
        return {{"server", m.server}, {"lhs", m.lhs}, {"mu", m.mu}, {"holds", m.holds}};
    }

    int run_exact(const ExactArgs &a)
    {
        for (const auto &c : a.checks)
            if (c != "drift" && c != "minrate" && c != "thm2")
                throw DomainError("--checks: unknown check '" + c + "'; expected drift, minrate or thm2");
        auto wants = [&](const char *c) { return std::find(a.checks.begin(), a.checks.end(), c) != a.checks.end(); };

        const CompatGraph g = load_graph(a.graph);
        json report = {{"K", a.K}};
        bool all_hold = true;

        if (wants("drift") || wants("minrate"))
        {
            const TruncatedChain chain = build_generator(g, a.K);
            const StationaryDist pi = stationary(chain);
            report["states"] = chain.num_states();
            report["boundary_mass"] = pi.boundary_mass;
            report["residual"] = pi.residual;
            report["solver"] = {{"method", pi.method}, {"iterations", pi.iterations}};
            if (wants("drift"))
            {
                json rows = json::array();
                double worst = 0.0;
                for (std::size_t i = 0; i < a.functions; ++i)
                {
                    const auto f = random_bounded_function(chain, a.seed + i);
                    const double r = check_zero_mean_drift(chain, pi, f);
                    worst = std::max(worst, r);
                    rows.push_back({{"function", i}, {"seed", a.seed + i}, {"residual", r}});
                }
                const bool holds = worst < 1e-8;
                all_hold = all_hold && holds;
                report["drift"] = {{"functions", rows}, {"max_residual", worst}, {"tolerance", 1e-8}, {"holds", holds}};
            }
            if (wants("minrate"))
            {
                json rows = json::array();
                bool holds = true;
                for (ServerId u = 0; u < g.num_servers(); ++u)
                {
                    const auto m = check_min_rate_inequality(chain, pi, u);
                    holds = holds && m.holds;
                    rows.push_back(min_rate_json(m));
                }
                all_hold = all_hold && holds;
                report["minrate"] = {{"servers", rows}, {"holds", holds}};
            }
        }

        if (wants("thm2"))
        {
            const auto &prov = g.provenance();
            if (!prov.is_object() || prov.value("family", "") != "dandelion")
                throw DomainError("thm2 needs a dandelion graph (its parameters come from the graph provenance)");
            const auto &p = prov.at("params");
            const std::size_t b = p.at("b"), c = p.at("c");
            const double lambda = p.at("lambda"), mu = p.at("mu");
            const auto rows = check_theorem2_convergence(a.n_list, b, c, lambda, mu, a.K);
            json table = json::array();
            bool holds = true;
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                const auto &r = rows[i];
                bool row_holds = r.expected_m <= r.m_bound + 1e-9;
                for (const auto &m : r.min_rate)
                    row_holds = row_holds && m.holds;
                for (double pc : r.p_central_min)
                    row_holds = row_holds && pc <= r.central_bound + 1e-9;
                if (i > 0)
                {
                    row_holds = row_holds && r.marginal_tv <= rows[i - 1].marginal_tv + 1e-3;
                    if (!std::isnan(r.joint_tv) && !std::isnan(rows[i - 1].joint_tv))
                        row_holds = row_holds && r.joint_tv <= rows[i - 1].joint_tv + 1e-3;
                }
                holds = holds && row_holds;
                json mr = json::array();
                for (const auto &m : r.min_rate)
                    mr.push_back(min_rate_json(m));
                table.push_back({{"n", r.n},
                                 {"states", r.states},
                                 {"boundary_mass", r.boundary_mass},
                                 {"residual", r.residual},
                                 {"marginal_tv", r.marginal_tv},
                                 {"joint_tv", std::isnan(r.joint_tv) ? json(nullptr) : json(r.joint_tv)},
                                 {"expected_m", r.expected_m},
                                 {"m_bound", r.m_bound},
                                 {"p_central_min", r.p_central_min},
                                 {"central_bound", r.central_bound},
                                 {"min_rate", mr},
                                 {"holds", row_holds}});
            }
            all_hold = all_hold && holds;
            report["thm2"] = {{"b", b},         {"c", c},         {"lambda", lambda}, {"mu", mu},
                              {"rows", table}, {"slack", 1e-3}, {"holds", holds}};
        }
        report["holds"] = all_hold;
        const json prov = {{"command", "exact"},
                           {"policy", "jsq"},
                           {"seed", a.seed},
                           {"generator", g.provenance()},
                           {"graph_file", a.graph},
                           {"checks", a.checks}};
        write_json(a.output, report, prov);
        std::cout << "wrote " << a.output << ": checks " << (all_hold ? "hold" : "FAILED") << "\n";
        return all_hold ? ok : breach;
    }

    // --- detect-skew ------------------------------------------------------------------------

    struct DetectArgs
    {
        std::string graph;
        std::string alpha;
        std::optional<ServerId> server;
        double drop = default_core_drop_fraction;
        std::size_t ergodicity_cap = default_ergodicity_cap;
        std::string output = "skew.json";
        std::string csv;
    };

    SkewParams parse_alpha(const std::string &text)
    {
        std::stringstream ss(text);
        std::vector<std::string> parts;
        for (std::string p; std::getline(ss, p, ',');)
            parts.push_back(p);
        if (parts.size() != 3)
            throw DomainError("--alpha: expected a,lambda_min,mu_max");
        try
        {
            std::size_t pos = 0;
            SkewParams alpha;
            const long long a = std::stoll(parts[0], &pos);
            if (pos != parts[0].size() || a < 1)
                throw std::invalid_argument("a");
            alpha.a = static_cast<std::size_t>(a);
            alpha.lambda_min = std::stod(parts[1]);
            alpha.mu_max = std::stod(parts[2]);
            alpha.validate();
            return alpha;
        }
        catch (const DomainError &)
        {
            throw;
        }
        catch (const std::exception &)
        {
            throw DomainError("--alpha: expected a,lambda_min,mu_max with a a positive integer");
        }
    }

    int run_detect(const DetectArgs &a)
    {
        const CompatGraph g = load_graph(a.graph);
        const SkewParams alpha = parse_alpha(a.alpha);
        if (g.num_servers() == 0)
            throw DomainError("graph has no servers");
        const ServerId u0 = a.server ? *a.server : max_degree_server(g);
        if (u0 >= g.num_servers())
            throw DomainError("--server " + std::to_string(u0) + " is not a server id");

        const auto core = find_skewed_core(g, u0, alpha, a.drop);
        json report = {{"alpha", {{"a", alpha.a}, {"lambda_min", alpha.lambda_min}, {"mu_max", alpha.mu_max}}},
                       {"server", u0},
                       {"degree", g.server_degree(u0)},
                       {"n_alpha", n_alpha(g, u0, alpha)},
                       {"n_alpha_size", n_alpha(g, u0, alpha).size()},
                       {"core",
                        {{"servers", core.servers},
                         {"order", core.order},
                         {"joint", core.joint},
                         {"dispatchers", core.dispatchers}}}};
        if (g.num_servers() <= a.ergodicity_cap)
        {
            const auto e = check_ergodicity_exact(g, a.ergodicity_cap);
            report["ergodicity"] = {{"status", to_string(e.status)},
                                    {"witness", e.witness},
                                    {"witness_arrival", e.witness_arrival},
                                    {"witness_service", e.witness_service}};
        }
        else
            report["ergodicity"] = {{"status", "skipped"},
                                    {"reason", "more servers than the subset enumeration cap"}};
        const json prov = {{"command", "detect-skew"},
                           {"generator", g.provenance()},
                           {"graph_file", a.graph},
                           {"drop_fraction", a.drop}};
        write_json(a.output, report, prov);
        if (!a.csv.empty())
        {
            std::ostringstream out;
            out << "server_id,group,degree,n_alpha\n";
            for (ServerId u = 0; u < g.num_servers(); ++u)
                out << u << ',' << (g.server_group(u).empty() ? "all" : g.server_group(u)) << ','
                    << g.server_degree(u) << ',' << n_alpha(g, u, alpha).size() << '\n';
            write_file(a.csv, out.str(), prov);
        }
        std::cout << "server " << u0 << ": |n_alpha| = " << report["n_alpha_size"] << ", core size "
                  << core.servers.size() << ", " << core.dispatchers.size() << " dispatchers\n";
        return ok;
    }

    template <class F>
    int guarded(F f)
    {
        try
        {
            return f();
        }
        catch (const ConfigError &e)
        {
            std::cerr << "config error: " << e.what() << "\n";
            return validation;
        }
        catch (const DomainError &e)
        {
            std::cerr << "error: " << e.what() << "\n";
            return validation;
        }
        catch (const UnsupportedStructure &e)
        {
            std::cerr << "unsupported: " << e.what() << "\n";
            return validation;
        }
        catch (const InvariantBreach &e)
        {
            std::cerr << "invariant breach: " << e.what() << "\n";
            return breach;
        }
        catch (const SizeError &e)
        {
            std::cerr << "resource cap: " << e.what() << "\n";
            return resource;
        }
        catch (const NumericError &e)
        {
            std::cerr << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
            return failure;
        }
        catch (const nlohmann::json::exception &e)
        {
            std::cerr << "error: malformed JSON input: " << e.what() << "\n";
            return validation;
        }
        catch (const std::exception &e)
        {
            std::cerr << "error: " << e.what() << "\n";
            return failure;
        }
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Load balancing on bipartite compatibility graphs: simulation, exact analysis, coupling."};
    app.set_version_flag("--version", code_version());
    app.require_subcommand(1);

    GenerateArgs gen;
    auto *generate = app.add_subcommand("generate", "Build a network and write it as graph JSON");
    generate->add_option("family", gen.family, "dandelion | cdn | random-bipartite | er | pod-expand | remove-central")
        ->required();
    generate->add_option("--params,-p", gen.params, "key=value[,key=value...]");
    generate->add_option("--seed", gen.seed, "Seed for the random families");
    generate->add_option("-g,--graph", gen.input, "Input graph for pod-expand and remove-central");
    generate->add_option("-o,--output", gen.output, "Output graph JSON")->required();

    SimulateArgs sim;
    auto *simulate_cmd = app.add_subcommand("simulate", "Simulate a graph and write per-server metrics");
    simulate_cmd->add_option("-g,--graph", sim.graph, "Graph JSON")->required();
    simulate_cmd->add_option("--policy", sim.policy, "jsq or pod:<d>");
    simulate_cmd->add_option("--horizon", sim.horizon, "Simulated time");
    simulate_cmd->add_option("--warmup", sim.warmup, "Fraction of the horizon discarded");
    simulate_cmd->add_option("--seed", sim.seed);
    simulate_cmd->add_option("--tail-k", sim.tail_ks, "Tail thresholds, comma separated")->delimiter(',');
    simulate_cmd->add_option("--batches", sim.batches, "Batch-means batches");
    simulate_cmd->add_option("--max-events", sim.max_events, "Event cap, 0 for none");
    simulate_cmd->add_option("--trace-interval", sim.trace_interval, "Group trace spacing, 0 disables");
    simulate_cmd->add_option("--replicas", sim.replicas, "Runs with seeds seed, seed+1, ...");
    simulate_cmd->add_option("--threads", sim.threads);
    simulate_cmd->add_option("-o,--output", sim.output, "Per-server CSV");
    simulate_cmd->add_option("--groups", sim.groups, "Per-group CSV");
    simulate_cmd->add_option("--trace", sim.trace, "Group trace CSV");

    RunArgs sw;
    std::uint64_t sw_seed = 0;
    std::size_t sw_threads = 1;
    auto *sweep_cmd = app.add_subcommand("sweep", "Run an experiment config (custom family grids or any preset)");
    sweep_cmd->add_option("-c,--config", sw.config, "TOML, or JSON with a .json extension")->required();
    sweep_cmd->add_option("--set", sw.set, "Override a field: section.key=value");
    sweep_cmd->add_option("--tier", sw.tier, "default or long");
    sweep_cmd->add_option("-o,--out", sw.output_dir, "Output directory");
    auto *sw_seed_opt = sweep_cmd->add_option("--seed", sw_seed);
    auto *sw_threads_opt = sweep_cmd->add_option("--threads", sw_threads);

    RunArgs pr;
    std::uint64_t pr_seed = 0;
    std::size_t pr_threads = 1;
    auto *preset_cmd = app.add_subcommand("preset", "Run a built-in experiment");
    preset_cmd->add_option("name", pr.preset, "dandelion-sweep | cdn | random-bipartite-skew | er-skew | custom")
        ->required();
    preset_cmd->add_option("-c,--config", pr.config, "Overrides, TOML or JSON");
    preset_cmd->add_option("--set", pr.set, "Override a field: section.key=value");
    preset_cmd->add_option("--tier", pr.tier, "default or long");
    preset_cmd->add_option("-o,--out", pr.output_dir, "Output directory");
    auto *pr_seed_opt = preset_cmd->add_option("--seed", pr_seed);
    auto *pr_threads_opt = preset_cmd->add_option("--threads", pr_threads);

    CoupleArgs cp;
    auto *couple_cmd = app.add_subcommand("couple", "Coupled simulation of a graph and its transform");
    couple_cmd->add_option("-g,--graph", cp.graph, "Original graph JSON")->required();
    couple_cmd->add_option("--ops", cp.ops, "Ordered array of tagged transform records")->required();
    couple_cmd->add_option("--events", cp.events, "Events per seed");
    couple_cmd->add_option("--seeds", cp.seeds, "Number of seeds");
    couple_cmd->add_option("--seed", cp.seed, "First seed");
    couple_cmd->add_option("--horizon", cp.horizon, "Time cap per seed");
    couple_cmd->add_option("-o,--output", cp.output, "Report JSON");

    ExactArgs ex;
    auto *exact_cmd = app.add_subcommand("exact", "Truncated-chain solve and stationary checks");
    exact_cmd->add_option("-g,--graph", ex.graph, "Graph JSON with independent clocks")->required();
    exact_cmd->add_option("-K,--cap", ex.K, "Per-server truncation");
    exact_cmd->add_option("--checks", ex.checks, "drift,minrate,thm2")->delimiter(',');
    exact_cmd->add_option("--n-list", ex.n_list, "Dispatcher counts for thm2")->delimiter(',');
    exact_cmd->add_option("--functions", ex.functions, "Random bounded functions for the drift check");
    exact_cmd->add_option("--seed", ex.seed);
    exact_cmd->add_option("-o,--output", ex.output, "Report JSON");

    DetectArgs dt;
    auto *detect_cmd = app.add_subcommand("detect-skew", "Skewed-neighborhood analysis of one server");
    detect_cmd->add_option("-g,--graph", dt.graph, "Graph JSON")->required();
    detect_cmd->add_option("--alpha", dt.alpha, "a,lambda_min,mu_max")->required();
    detect_cmd->add_option("--server", dt.server, "Start server, default the maximum-degree one");
    detect_cmd->add_option("--drop", dt.drop, "Core growth stops below this fraction");
    detect_cmd->add_option("--ergodicity-cap", dt.ergodicity_cap, "Largest server count for subset enumeration");
    detect_cmd->add_option("-o,--output", dt.output, "Report JSON");
    detect_cmd->add_option("--csv", dt.csv, "Per-server degree and n_alpha size");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return validation;
    }

    if (*generate)
        return guarded([&] { return run_generate(gen); });
    if (*simulate_cmd)
        return guarded([&] { return run_simulate(sim); });
    if (*sweep_cmd)
    {
        if (*sw_seed_opt)
            sw.seed = sw_seed;
        if (*sw_threads_opt)
            sw.threads = sw_threads;
        return guarded([&] { return run_experiment(sw); });
    }
    if (*preset_cmd)
    {
        if (*pr_seed_opt)
            pr.seed = pr_seed;
        if (*pr_threads_opt)
            pr.threads = pr_threads;
        return guarded([&] { return run_experiment(pr); });
    }
    if (*couple_cmd)
        return guarded([&] { return run_couple(cp); });
    if (*exact_cmd)
        return guarded([&] { return run_exact(ex); });
    if (*detect_cmd)
        return guarded([&] { return run_detect(dt); });
    return validation;
}
