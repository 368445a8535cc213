#include "skewnet/coupling.hpp"

#include "skewnet/errors.hpp"
#include "skewnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace skewnet
{
    namespace
    {
        std::string str(std::size_t v) { return std::to_string(v); }

        void check_dispatcher(const CompatGraph &g, DispatcherId d, const char *op)
        {
            if (d >= g.num_dispatchers())
                throw DomainError(std::string(op) + ": unknown dispatcher " + str(d));
        }

        void check_server(const CompatGraph &g, ServerId u, const char *op)
        {
            if (u >= g.num_servers())
                throw DomainError(std::string(op) + ": unknown server " + str(u));
        }

        void check_fresh(const CompatGraph &g, const std::optional<ServerId> &id, const char *op)
        {
            if (id && *id != g.num_servers())
                throw DomainError(std::string(op) + ": new server id " + str(*id) + " is not the next free id " +
                                  str(g.num_servers()));
        }

        nlohmann::json transformed_provenance(const CompatGraph &g, const TransformOp &op)
        {
            const auto &src = g.provenance();
            if (src.is_object() && src.value("family", "") == "transformed")
            {
                nlohmann::json p = src;
                p["ops"].push_back(to_json(op));
                return p;
            }
            return {{"family", "transformed"}, {"ops", nlohmann::json::array({to_json(op)})}, {"source", src}};
        }

        std::vector<std::string> labels(const CompatGraph &g)
        {
            std::vector<std::string> out(g.num_servers());
            for (ServerId u = 0; u < g.num_servers(); ++u)
                out[u] = g.server_group(u);
            return out;
        }
    }

    nlohmann::json to_json(const TransformOp &op)
    {
        return std::visit(
            [](const auto &o) -> nlohmann::json
            {
                using T = std::decay_t<decltype(o)>;
                nlohmann::json j;
                if constexpr (std::is_same_v<T, EdgeSimplify>)
                {
                    j = {{"op", "edge_simplify"}, {"d", o.d}, {"u", o.u}};
                    if (o.v_new)
                        j["v_new"] = *o.v_new;
                }
                else if constexpr (std::is_same_v<T, AddServer>)
                {
                    j = {{"op", "add_server"}, {"d", o.d}, {"mu", o.mu}};
                    if (o.u_new)
                        j["u_new"] = *o.u_new;
                }
                else if constexpr (std::is_same_v<T, DecreaseArrival>)
                    j = {{"op", "decrease_arrival"}, {"d", o.d}, {"lambda", o.lambda}};
                else
                    j = {{"op", "increase_service"}, {"u", o.u}, {"mu", o.mu}};
                return j;
            },
            op);
    }

    TransformOp transform_from_json(const nlohmann::json &j)
    {
        if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
            throw DomainError("transform record needs a string field \"op\"");
        const std::string kind = j["op"];
        auto id = [&](const char *key) -> std::size_t
        {
            if (!j.contains(key) || !j[key].is_number_unsigned())
                throw DomainError(kind + ": field \"" + key + "\" must be a nonnegative integer");
            return j[key].get<std::size_t>();
        };
        auto opt_id = [&](const char *key) -> std::optional<std::size_t>
        {
            if (!j.contains(key))
                return std::nullopt;
            return id(key);
        };
        auto rate = [&](const char *key) -> double
        {
            if (!j.contains(key) || !j[key].is_number())
                throw DomainError(kind + ": field \"" + key + "\" must be a number");
            return j[key].get<double>();
        };
        auto only = [&](std::initializer_list<const char *> keys)
        {
            for (const auto &[k, v] : j.items())
            {
                if (k == "op")
                    continue;
                if (std::none_of(keys.begin(), keys.end(), [&](const char *x) { return k == x; }))
                    throw DomainError(kind + ": unknown field \"" + k + "\"");
            }
        };
        if (kind == "edge_simplify")
        {
            only({"d", "u", "v_new"});
            return EdgeSimplify{id("d"), id("u"), opt_id("v_new")};
        }
        if (kind == "add_server")
        {
            only({"d", "u_new", "mu"});
            return AddServer{id("d"), opt_id("u_new"), rate("mu")};
        }
        if (kind == "decrease_arrival")
        {
            only({"d", "lambda"});
            return DecreaseArrival{id("d"), rate("lambda")};
        }
        if (kind == "increase_service")
        {
            only({"u", "mu"});
            return IncreaseService{id("u"), rate("mu")};
        }
        throw DomainError("unknown transform \"" + kind + "\"");
    }

    std::vector<TransformOp> transforms_from_json(const nlohmann::json &j)
    {
        if (!j.is_array())
            throw DomainError("transform list must be a JSON array");
        std::vector<TransformOp> ops;
        for (std::size_t i = 0; i < j.size(); ++i)
        {
            try
            {
                ops.push_back(transform_from_json(j[i]));
            }
            catch (const DomainError &e)
            {
                throw DomainError("ops[" + str(i) + "]: " + e.what());
            }
        }
        return ops;
    }

    ServerId ServerMap::apply(DispatcherId d, ServerId w) const
    {
        const auto &m = phi.at(d);
        auto it = std::lower_bound(m.begin(), m.end(), std::make_pair(w, ServerId{0}));
        if (it == m.end() || it->first != w)
            throw DomainError("server " + str(w) + " is not compatible with dispatcher " + str(d));
        return it->second;
    }

    ServerMap identity_map(const CompatGraph &g)
    {
        ServerMap m;
        m.server.resize(g.num_servers());
        for (ServerId u = 0; u < g.num_servers(); ++u)
            m.server[u] = u;
        m.phi.resize(g.num_dispatchers());
        for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
            for (ServerId u : g.dispatcher_neighbors(d))
                m.phi[d].emplace_back(u, u);
        return m;
    }

    ServerMap compose(const ServerMap &a, const ServerMap &b)
    {
        if (a.phi.size() != b.phi.size())
            throw DomainError("server maps cover different dispatcher sets");
        ServerMap m;
        m.server.reserve(a.server.size());
        for (ServerId w : a.server)
            m.server.push_back(b.server.at(w));
        m.phi.resize(a.phi.size());
        for (DispatcherId d = 0; d < a.phi.size(); ++d)
            for (const auto &[w, y] : a.phi[d])
                m.phi[d].emplace_back(w, b.apply(d, y));
        return m;
    }

    Transformed apply_transform(const CompatGraph &g, const TransformOp &op)
    {
        GraphSpec s = g.spec();
        s.departure_partition = g.blocks();
        s.server_group = labels(g);
        ServerMap map = identity_map(g);

        if (const auto *o = std::get_if<EdgeSimplify>(&op))
        {
            check_dispatcher(g, o->d, "edge_simplify");
            check_server(g, o->u, "edge_simplify");
            if (!g.has_edge(o->d, o->u))
                throw DomainError("edge_simplify: (" + str(o->d) + ", " + str(o->u) + ") is not an edge");
            check_fresh(g, o->v_new, "edge_simplify");
            const ServerId v = g.num_servers();
            std::erase(s.edges, std::make_pair(o->d, o->u));
            s.edges.emplace_back(o->d, v);
            s.num_servers = v + 1;
            s.service_rate.push_back(g.service_rate(o->u));
            s.server_group.push_back("added");
            s.departure_partition[g.block_of(o->u)].push_back(v);
            for (auto &[w, y] : map.phi[o->d])
                if (w == o->u)
                    y = v;
        }
        else if (const auto *o = std::get_if<AddServer>(&op))
        {
            check_dispatcher(g, o->d, "add_server");
            check_fresh(g, o->u_new, "add_server");
            if (!(std::isfinite(o->mu) && o->mu > 0.0))
                throw DomainError("add_server: mu must be finite and positive");
            const ServerId v = g.num_servers();
            s.edges.emplace_back(o->d, v);
            s.num_servers = v + 1;
            s.service_rate.push_back(o->mu);
            s.server_group.push_back("added");
            s.departure_partition.push_back({v});
        }
        else if (const auto *o = std::get_if<DecreaseArrival>(&op))
        {
            check_dispatcher(g, o->d, "decrease_arrival");
            if (!(o->lambda > 0.0 && o->lambda <= g.arrival_rate(o->d)))
                throw DomainError("decrease_arrival: need 0 < lambda <= " + std::to_string(g.arrival_rate(o->d)) +
                                  " at dispatcher " + str(o->d));
            if (o->lambda == g.arrival_rate(o->d))
                return {g, std::move(map)};
            s.arrival_rate[o->d] = o->lambda;
        }
        else if (const auto *o = std::get_if<IncreaseService>(&op))
        {
            check_server(g, o->u, "increase_service");
            if (!(std::isfinite(o->mu) && o->mu >= g.service_rate(o->u)))
                throw DomainError("increase_service: need finite mu >= " + std::to_string(g.service_rate(o->u)) +
                                  " at server " + str(o->u));
            if (o->mu == g.service_rate(o->u))
                return {g, std::move(map)};
            for (ServerId w : g.block(g.block_of(o->u)))
                s.service_rate[w] = o->mu;
        }

        s.provenance = transformed_provenance(g, op);
        return {CompatGraph(std::move(s)), std::move(map)};
    }

    Transformed apply_transforms(const CompatGraph &g, const std::vector<TransformOp> &ops)
    {
        Transformed t{g, identity_map(g)};
        for (std::size_t i = 0; i < ops.size(); ++i)
        {
            try
            {
                Transformed next = apply_transform(t.graph, ops[i]);
                t.map = compose(t.map, next.map);
                t.graph = std::move(next.graph);
            }
            catch (const DomainError &e)
            {
                throw DomainError("ops[" + str(i) + "]: " + e.what());
            }
        }
        return t;
    }

    ServerSet minimizers(std::span<const ServerId> neighbors, const QueueState &x)
    {
        ServerSet m;
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (ServerId u : neighbors)
        {
            if (x[u] < best)
            {
                best = x[u];
                m.clear();
            }
            if (x[u] == best)
                m.push_back(u);
        }
        return m;
    }

    std::pair<ServerId, ServerId> joint_dispatch(std::span<const ServerId> m1, std::span<const ServerId> m2,
                                                 const QueueState &x1, const QueueState &x2,
                                                 std::span<const std::pair<ServerId, ServerId>> phi, double u_a,
                                                 double u_b)
    {
        if (m1.empty() || m2.empty())
            throw DomainError("joint_dispatch needs nonempty minimizer sets");
        for (const auto &[w, y] : phi)
            if (x1[w] < x2[y])
                throw InvariantBreach("coupling precondition fails: x1(" + str(w) + ") = " + std::to_string(x1[w]) +
                                      " < x2(" + str(y) + ") = " + std::to_string(x2[y]));
        auto pick = [](std::span<const ServerId> m, double u)
        { return m[std::min(m.size() - 1, static_cast<std::size_t>(u * static_cast<double>(m.size())))]; };

        ServerId c1 = 0, c2 = 0;
        if (x1[m1.front()] == x2[m2.front()])
        {
            c2 = pick(m2, u_a);
            // phi(M1) lies inside M2 here, so copying keeps U1 uniform on M1.
            auto back = std::find_if(phi.begin(), phi.end(), [&](const auto &p) { return p.second == c2; });
            const bool hit = back != phi.end() && std::binary_search(m1.begin(), m1.end(), back->first);
            c1 = hit ? back->first : pick(m1, u_b);
        }
        else
        {
            c1 = pick(m1, u_b);
            c2 = pick(m2, u_a);
        }

        for (const auto &[w, y] : phi)
            if (x1[w] + (c1 == w) < x2[y] + (c2 == y))
                throw InvariantBreach("coupled placement breaks x1(" + str(w) + ") >= x2(" + str(y) + ")");
        return {c1, c2};
    }

    nlohmann::json to_json(const DominanceReport &r)
    {
        nlohmann::json j = {{"events", r.events},
                            {"arrivals1", r.arrivals1},
                            {"arrivals2", r.arrivals2},
                            {"departures1", r.departures1},
                            {"departures2", r.departures2},
                            {"pair_checks", r.pair_checks},
                            {"violations", r.violations},
                            {"sim_time", r.sim_time}};
        if (r.first_violation)
        {
            const auto &v = *r.first_violation;
            j["first_violation"] = {{"event", v.event},       {"time", v.time},   {"original", v.original},
                                    {"image", v.image},       {"x1", v.x1},       {"x2", v.x2},
                                    {"per_dispatcher", v.per_dispatcher}};
            if (v.per_dispatcher)
                j["first_violation"]["dispatcher"] = v.dispatcher;
        }
        return j;
    }

    CoupledRun coupled_simulate(const CompatGraph &g1, const std::vector<TransformOp> &ops, const QueueState &x0,
                                const SimConfig &cfg)
    {
        cfg.validate();
        Transformed t = apply_transforms(g1, ops);
        const CompatGraph &g2 = t.graph;
        const ServerMap &map = t.map;
        const std::size_t nd = g1.num_dispatchers();
        const std::size_t ns1 = g1.num_servers();
        const std::size_t nb2 = g2.num_blocks();

        QueueState start1 = x0.empty() ? QueueState(ns1, 0) : x0;
        if (start1.size() != ns1)
            throw DomainError("initial state has " + str(start1.size()) + " entries, expected " + str(ns1));
        QueueState start2(g2.num_servers(), 0);
        for (ServerId w = 0; w < ns1; ++w)
            start2[map.server[w]] = start1[w];

        const double ws = cfg.warmup_fraction * cfg.horizon;
        OccupancyRecorder r1(g1, start1, cfg.tail_ks, ws, cfg.horizon, cfg.batches, cfg.trace_interval);
        OccupancyRecorder r2(g2, start2, cfg.tail_ks, ws, cfg.horizon, cfg.batches, cfg.trace_interval);

        // The g1 block behind each g2 block, if any; g1 blocks only ever gain new servers.
        std::vector<std::size_t> parent(nb2, g1.num_blocks());
        for (std::size_t k = 0; k < g1.num_blocks(); ++k)
            parent[g2.block_of(map.server[g1.block(k)[0]])] = k;

        std::vector<Stream> arrive(nd), select(nd), thin_arrival(nd), depart(nb2), thin_depart(nb2);
        for (DispatcherId d = 0; d < nd; ++d)
        {
            arrive[d] = Stream::derive(cfg.seed, streams::arrivals, d);
            select[d] = Stream::derive(cfg.seed, streams::selection, d);
            thin_arrival[d] = Stream::derive(cfg.seed, streams::thinning, d);
        }
        for (std::size_t k = 0; k < nb2; ++k)
        {
            depart[k] = Stream::derive(cfg.seed, streams::departures, k);
            thin_depart[k] = Stream::derive(cfg.seed, streams::thinning, nd + k);
        }

        CoupledRun run;
        DominanceReport &rep = run.report;
        rep.arrivals2_by_dispatcher.assign(nd, 0);

        auto check = [&](std::uint64_t event, double time)
        {
            const QueueState &x1 = r1.state();
            const QueueState &x2 = r2.state();
            for (ServerId w = 0; w < ns1; ++w)
            {
                ++rep.pair_checks;
                if (x1[w] < x2[map.server[w]])
                {
                    rep.first_violation = DominanceViolation{event, time, 0, false, w, map.server[w], x1[w],
                                                             x2[map.server[w]]};
                    return false;
                }
            }
            for (DispatcherId d = 0; d < nd; ++d)
                for (const auto &[w, y] : map.phi[d])
                {
                    ++rep.pair_checks;
                    if (x1[w] < x2[y])
                    {
                        rep.first_violation = DominanceViolation{event, time, d, true, w, y, x1[w], x2[y]};
                        return false;
                    }
                }
            return true;
        };

        using Event = std::pair<double, std::size_t>;
        std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
        for (DispatcherId d = 0; d < nd; ++d)
            if (g1.arrival_rate(d) > 0.0)
                queue.emplace(arrive[d].exponential(g1.arrival_rate(d)), d);
        for (std::size_t k = 0; k < nb2; ++k)
            queue.emplace(depart[k].exponential(g2.service_rate(g2.block(k)[0])), nd + k);

        bool partial = false;
        double now = 0.0;
        if (!check(0, 0.0))
            rep.violations = 1;
        while (!queue.empty() && rep.violations == 0)
        {
            const auto [time, src] = queue.top();
            if (time > cfg.horizon)
                break;
            if (cfg.max_events != 0 && rep.events == cfg.max_events)
            {
                partial = true;
                break;
            }
            queue.pop();
            ++rep.events;
            now = time;
            if (src < nd)
            {
                const DispatcherId d = src;
                const double l1 = g1.arrival_rate(d);
                const bool second = thin_arrival[d].uniform() * l1 < g2.arrival_rate(d);
                const double u_a = select[d].uniform();
                const double u_b = select[d].uniform();
                const ServerSet m1 = minimizers(g1.dispatcher_neighbors(d), r1.state());
                if (second)
                {
                    const ServerSet m2 = minimizers(g2.dispatcher_neighbors(d), r2.state());
                    const auto [c1, c2] = joint_dispatch(m1, m2, r1.state(), r2.state(), map.phi[d], u_a, u_b);
                    r1.change(c1, +1, time);
                    r2.change(c2, +1, time);
                    ++rep.arrivals2;
                    ++rep.arrivals2_by_dispatcher[d];
                }
                else
                {
                    const ServerId c1 = m1[std::min(m1.size() - 1, static_cast<std::size_t>(u_a * m1.size()))];
                    r1.change(c1, +1, time);
                }
                ++rep.arrivals1;
                queue.emplace(time + arrive[d].exponential(l1), src);
            }
            else
            {
                const std::size_t k = src - nd;
                const double mu2 = g2.service_rate(g2.block(k)[0]);
                // One mark per tick, drawn even when the tick has no first-system counterpart.
                const double mark = thin_depart[k].uniform();
                if (parent[k] < g1.num_blocks())
                {
                    const auto b1 = g1.block(parent[k]);
                    if (mark * mu2 < g1.service_rate(b1[0]))
                        for (ServerId w : b1)
                            if (r1[w] > 0)
                            {
                                r1.change(w, -1, time);
                                ++rep.departures1;
                            }
                }
                for (ServerId u : g2.block(k))
                    if (r2[u] > 0)
                    {
                        r2.change(u, -1, time);
                        ++rep.departures2;
                    }
                queue.emplace(time + depart[k].exponential(mu2), src);
            }
            if (!check(rep.events, time))
                rep.violations = 1;
        }

        // A stopped run is closed where it stopped.
        const bool early = partial || rep.violations > 0;
        const double t_end = early ? now : cfg.horizon;
        rep.sim_time = t_end;
        run.m1 = r1.finish(t_end, early);
        run.m2 = r2.finish(t_end, early);
        run.m1.events = run.m2.events = rep.events;
        run.m1.arrivals = rep.arrivals1;
        run.m2.arrivals = rep.arrivals2;
        run.m1.departures = rep.departures1;
        run.m2.departures = rep.departures2;
        run.g2 = std::move(t.graph);
        run.map = std::move(t.map);
        return run;
    }

    LowerBoundPlan build_dandelion_lower_bound(const CompatGraph &g, std::span<const ServerId> core,
                                               std::span<const DispatcherId> dispatchers, const SkewParams &alpha,
                                               const LowerBoundRates &rates)
    {
        alpha.validate();
        if (core.empty())
            throw DomainError("lower bound needs a nonempty server core");
        if (dispatchers.empty())
            throw DomainError("lower bound needs a nonempty dispatcher set");
        ServerSet U(core.begin(), core.end());
        std::sort(U.begin(), U.end());
        if (std::adjacent_find(U.begin(), U.end()) != U.end())
            throw DomainError("server core has duplicates");
        DispatcherSet A(dispatchers.begin(), dispatchers.end());
        std::sort(A.begin(), A.end());
        if (std::adjacent_find(A.begin(), A.end()) != A.end())
            throw DomainError("dispatcher set has duplicates");
        for (ServerId u : U)
            check_server(g, u, "lower bound");
        for (DispatcherId d : A)
            check_dispatcher(g, d, "lower bound");

        const DispatcherSet joint = n_alpha_joint(g, U, alpha);
        for (DispatcherId d : A)
            if (!std::binary_search(joint.begin(), joint.end(), d))
                throw DomainError("dispatcher " + str(d) + " is not in the joint n_alpha set of the core");
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t j = i + 1; j < A.size(); ++j)
            {
                const auto ni = g.dispatcher_neighbors(A[i]);
                const auto nj = g.dispatcher_neighbors(A[j]);
                ServerSet common;
                std::set_intersection(ni.begin(), ni.end(), nj.begin(), nj.end(), std::back_inserter(common));
                for (ServerId u : common)
                    if (!std::binary_search(U.begin(), U.end(), u))
                        throw DomainError("dispatchers " + str(A[i]) + " and " + str(A[j]) + " share server " +
                                          str(u) + " outside the core");
            }

        const std::size_t a = alpha.a;
        const std::size_t c = U.size();
        LowerBoundPlan plan;
        plan.component.central = U;
        plan.component.dispatchers = A;
        plan.component.a = a;
        if (c == a)
        {
            plan.trivial = true;
            return plan;
        }

        const double mu = rates.mu.value_or(1.01 * alpha.mu_max);
        double lambda = rates.lambda.value_or(0.99 * alpha.lambda_min);
        if (!rates.lambda)
            lambda = std::min(lambda, 0.99 * static_cast<double>(a - c) * mu);
        if (!(std::isfinite(mu) && mu >= alpha.mu_max))
            throw DomainError("lower bound service rate must be >= mu_max");
        if (!(lambda > 0.0 && lambda <= alpha.lambda_min))
            throw DomainError("lower bound arrival rate must lie in (0, lambda_min]");
        if (!(lambda < static_cast<double>(a - c) * mu))
            throw DomainError("lower bound rates must satisfy lambda < (a - c) mu");
        plan.component.lambda = lambda;
        plan.component.mu = mu;

        // Servers seen by A, ascending.
        ServerSet seen;
        for (DispatcherId d : A)
            for (ServerId u : g.dispatcher_neighbors(d))
                seen.push_back(u);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());

        for (DispatcherId d : A)
            plan.ops.push_back(DecreaseArrival{d, lambda});
        for (ServerId u : seen)
            plan.ops.push_back(IncreaseService{u, mu});

        ServerId next = g.num_servers();
        for (ServerId u : seen)
            for (DispatcherId e : g.server_neighbors(u))
                if (!std::binary_search(A.begin(), A.end(), e))
                    plan.ops.push_back(EdgeSimplify{e, u, next++});

        for (DispatcherId d : A)
        {
            std::vector<ServerId> boundary;
            for (ServerId u : g.dispatcher_neighbors(d))
                if (!std::binary_search(U.begin(), U.end(), u))
                    boundary.push_back(u);
            for (std::size_t deg = g.dispatcher_degree(d); deg < a; ++deg)
            {
                plan.ops.push_back(AddServer{d, next, mu});
                boundary.push_back(next++);
            }
            plan.component.boundary.push_back(std::move(boundary));
        }
        return plan;
    }

    CompatGraph extract_component(const CompatGraph &g2, const DandelionComponent &comp)
    {
        const std::size_t c = comp.central.size();
        const std::size_t n = comp.dispatchers.size();
        if (comp.boundary.size() != n)
            throw DomainError("component lists boundary servers for " + str(comp.boundary.size()) +
                              " dispatchers, expected " + str(n));
        const std::size_t b = n > 0 ? comp.boundary[0].size() : 0;

        // Local layout: central servers first, then each dispatcher's boundary servers.
        std::vector<ServerId> local;
        local.insert(local.end(), comp.central.begin(), comp.central.end());
        for (const auto &bd : comp.boundary)
        {
            if (bd.size() != b)
                throw DomainError("boundary sizes differ across dispatchers");
            local.insert(local.end(), bd.begin(), bd.end());
        }
        for (ServerId u : local)
            check_server(g2, u, "component");
        std::vector<ServerId> sorted_local = local;
        std::sort(sorted_local.begin(), sorted_local.end());
        if (std::adjacent_find(sorted_local.begin(), sorted_local.end()) != sorted_local.end())
            throw DomainError("component lists a server twice");

        const Components cc = connected_components(g2);
        const std::size_t label = cc.dispatcher_label.at(comp.dispatchers.at(0));
        std::size_t members = 0;
        for (DispatcherId d = 0; d < g2.num_dispatchers(); ++d)
            if (cc.dispatcher_label[d] == label)
            {
                ++members;
                if (!std::binary_search(comp.dispatchers.begin(), comp.dispatchers.end(), d))
                    throw DomainError("dispatcher " + str(d) + " is connected to the component");
            }
        if (members != n)
            throw DomainError("component dispatchers are not connected");
        std::size_t servers = 0;
        for (ServerId u = 0; u < g2.num_servers(); ++u)
            servers += cc.server_label[u] == label;
        if (servers != local.size())
            throw DomainError("component has " + str(servers) + " servers, expected " + str(local.size()));

        std::vector<std::size_t> seen_blocks;
        for (ServerId u : local)
        {
            if (cc.server_label[u] != label)
                throw DomainError("server " + str(u) + " lies outside the component");
            seen_blocks.push_back(g2.block_of(u));
        }
        std::sort(seen_blocks.begin(), seen_blocks.end());
        if (std::adjacent_find(seen_blocks.begin(), seen_blocks.end()) != seen_blocks.end())
            throw DomainError("two component servers share a departure clock");

        GraphSpec s;
        s.num_dispatchers = n;
        s.num_servers = local.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const DispatcherId d = comp.dispatchers[i];
            std::vector<ServerId> expect(comp.central.begin(), comp.central.end());
            expect.insert(expect.end(), comp.boundary[i].begin(), comp.boundary[i].end());
            std::sort(expect.begin(), expect.end());
            const auto nb = g2.dispatcher_neighbors(d);
            if (!std::equal(nb.begin(), nb.end(), expect.begin(), expect.end()))
                throw DomainError("dispatcher " + str(d) + " does not see exactly the core and its boundary");
            for (ServerId j = 0; j < c; ++j)
                s.edges.emplace_back(i, j);
            for (ServerId j = 0; j < b; ++j)
                s.edges.emplace_back(i, c + i * b + j);
            s.arrival_rate.push_back(g2.arrival_rate(d));
        }
        for (ServerId u : local)
            s.service_rate.push_back(g2.service_rate(u));
        for (std::size_t j = 0; j < local.size(); ++j)
            s.server_group.push_back(j < c ? "central" : "boundary");
        return CompatGraph(std::move(s));
    }
}
