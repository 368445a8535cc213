#include "skewnet/generators.hpp"

#include "skewnet/errors.hpp"
#include "skewnet/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace skewnet
{
    namespace
    {
        // Number of failures before the next success in Bernoulli(p) trials.
        std::size_t geometric_gap(Stream &rng, double p)
        {
            if (p >= 1.0)
                return 0;
            const double g = std::floor(std::log1p(-rng.uniform()) / std::log1p(-p));
            if (!(g < static_cast<double>(std::numeric_limits<std::size_t>::max() / 2)))
                return std::numeric_limits<std::size_t>::max() / 2;
            return static_cast<std::size_t>(g);
        }

        void require_rate(double v, bool allow_zero, const char *what)
        {
            if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0))
                throw DomainError(std::string(what) + " must be " + (allow_zero ? "finite and >= 0" : "finite and > 0"));
        }
    }

    std::size_t binomial(std::size_t n, std::size_t k) noexcept
    {
        if (k > n)
            return 0;
        k = std::min(k, n - k);
        std::size_t r = 1;
        for (std::size_t i = 1; i <= k; ++i)
        {
            // r * (n - k + i) / i stays integral at every step.
            const std::size_t num = n - k + i;
            if (r > std::numeric_limits<std::size_t>::max() / num)
                return std::numeric_limits<std::size_t>::max();
            r = r * num / i;
        }
        return r;
    }

    void DandelionSpec::validate() const
    {
        if (n < 1)
            throw DomainError("dandelion: n must be >= 1");
        if (b < 1)
            throw DomainError("dandelion: b must be >= 1");
        require_rate(lambda, true, "dandelion: lambda");
        require_rate(mu, false, "dandelion: mu");
        if (strict_ergodic && !(lambda < mu * static_cast<double>(b)))
            throw DomainError("dandelion: lambda must be below mu * b for an ergodic instance");
    }

    CompatGraph dandelion(const DandelionSpec &spec)
    {
        spec.validate();
        GraphSpec s;
        s.num_dispatchers = spec.n;
        s.num_servers = spec.n * spec.b + spec.c;
        s.edges.reserve(spec.n * (spec.b + spec.c));
        for (DispatcherId d = 0; d < spec.n; ++d)
        {
            for (ServerId u = 0; u < spec.c; ++u)
                s.edges.emplace_back(d, u);
            for (std::size_t j = 0; j < spec.b; ++j)
                s.edges.emplace_back(d, spec.c + d * spec.b + j);
        }
        s.arrival_rate.assign(spec.n, spec.lambda);
        s.service_rate.assign(s.num_servers, spec.mu);
        s.server_group.assign(s.num_servers, "boundary");
        for (ServerId u = 0; u < spec.c; ++u)
            s.server_group[u] = "central";
        s.provenance = {{"family", "dandelion"},
                        {"params",
                         {{"n", spec.n}, {"b", spec.b}, {"c", spec.c}, {"lambda", spec.lambda}, {"mu", spec.mu}}}};
        return CompatGraph(std::move(s));
    }

    CompatGraph remove_central(const CompatGraph &g)
    {
        const auto &prov = g.provenance();
        if (!prov.is_object() || prov.value("family", "") != "dandelion" || !prov.contains("params"))
            throw DomainError("remove_central: graph does not carry dandelion provenance");
        const auto &p = prov.at("params");
        const std::size_t n = p.at("n").get<std::size_t>();
        const std::size_t b = p.at("b").get<std::size_t>();
        const std::size_t c = p.at("c").get<std::size_t>();
        if (g.num_dispatchers() != n || g.num_servers() != n * b + c)
            throw DomainError("remove_central: graph shape does not match its dandelion provenance");

        GraphSpec s;
        s.num_dispatchers = n;
        s.num_servers = n * b;
        for (const auto &[d, u] : g.edges())
            if (u >= c)
                s.edges.emplace_back(d, u - c);
        s.arrival_rate.assign(g.arrival_rates().begin(), g.arrival_rates().end());
        s.service_rate.assign(g.service_rates().begin() + static_cast<std::ptrdiff_t>(c), g.service_rates().end());
        s.server_group.assign(s.num_servers, "boundary");
        s.provenance = {{"family", "dandelion-without-central"}, {"source", prov}};
        return CompatGraph(std::move(s));
    }

    void CdnSpec::validate() const
    {
        if (clusters < 1)
            throw DomainError("cdn: clusters must be >= 1");
        if (edge_per_cluster < 1)
            throw DomainError("cdn: edge_per_cluster must be >= 1");
        if (!(rho > 0.0 && rho < 1.0))
            throw DomainError("cdn: rho must lie in (0, 1)");
        require_rate(tier1_rate_multiplier, false, "cdn: tier1_rate_multiplier");
        require_rate(mu, false, "cdn: mu");
    }

    CompatGraph cdn_network(const CdnSpec &spec)
    {
        spec.validate();
        const std::size_t E = spec.edge_per_cluster;
        const std::size_t O = spec.origin_count;
        const double per_cluster = spec.rho * spec.mu * static_cast<double>(E);
        const double r = per_cluster / (spec.tier1_rate_multiplier + static_cast<double>(E));

        GraphSpec s;
        s.num_dispatchers = spec.clusters * (E + 1);
        s.num_servers = O + spec.clusters * E;
        s.edges.reserve(spec.clusters * (2 * E + (E + 1) * O));
        s.arrival_rate.reserve(s.num_dispatchers);
        DispatcherId d = 0;
        for (std::size_t k = 0; k < spec.clusters; ++k)
        {
            const ServerId first_edge = O + k * E;
            for (ServerId u = 0; u < O; ++u)
                s.edges.emplace_back(d, u);
            for (std::size_t j = 0; j < E; ++j)
                s.edges.emplace_back(d, first_edge + j);
            s.arrival_rate.push_back(spec.tier1_rate_multiplier * r);
            ++d;
            for (std::size_t j = 0; j < E; ++j, ++d)
            {
                for (ServerId u = 0; u < O; ++u)
                    s.edges.emplace_back(d, u);
                s.edges.emplace_back(d, first_edge + j);
                s.arrival_rate.push_back(r);
            }
        }
        s.service_rate.assign(s.num_servers, spec.mu);
        s.server_group.assign(s.num_servers, "edge");
        for (ServerId u = 0; u < O; ++u)
            s.server_group[u] = "origin";
        s.provenance = {{"family", "cdn"},
                        {"params",
                         {{"clusters", spec.clusters},
                          {"edge_per_cluster", E},
                          {"origin_count", O},
                          {"rho", spec.rho},
                          {"tier1_rate_multiplier", spec.tier1_rate_multiplier},
                          {"mu", spec.mu}}}};
        return CompatGraph(std::move(s));
    }

    void RandomBipartiteSpec::validate() const
    {
        if (n < 1)
            throw DomainError("random_bipartite: n must be >= 1");
        if (!(b > 0.0) || b > static_cast<double>(n))
            throw DomainError("random_bipartite: b must lie in (0, n]");
        require_rate(lambda, true, "random_bipartite: lambda");
        require_rate(mu, false, "random_bipartite: mu");
    }

    CompatGraph random_bipartite(const RandomBipartiteSpec &spec)
    {
        spec.validate();
        const std::size_t n = spec.n;
        const double p = spec.b / static_cast<double>(n);
        Stream rng = Stream::derive(spec.seed, streams::graph, 0);

        GraphSpec s;
        s.num_dispatchers = n;
        s.num_servers = spec.stabilize ? 2 * n : n;
        std::vector<ServerId> row;
        for (DispatcherId d = 0; d < n; ++d)
        {
            do
            {
                row.clear();
                std::size_t j = geometric_gap(rng, p);
                while (j < n)
                {
                    row.push_back(j);
                    j += 1 + geometric_gap(rng, p);
                }
            } while (row.empty() && !spec.stabilize);
            for (ServerId u : row)
                s.edges.emplace_back(d, u);
            if (spec.stabilize)
                s.edges.emplace_back(d, n + d);
        }
        s.arrival_rate.assign(n, spec.lambda);
        s.service_rate.assign(s.num_servers, spec.mu);
        if (spec.stabilize)
        {
            s.server_group.assign(s.num_servers, "shared");
            for (ServerId u = n; u < 2 * n; ++u)
                s.server_group[u] = "dedicated";
        }
        s.provenance = {{"family", "random-bipartite"},
                        {"params",
                         {{"n", n},
                          {"b", spec.b},
                          {"stabilize", spec.stabilize},
                          {"lambda", spec.lambda},
                          {"mu", spec.mu}}},
                        {"seed", spec.seed}};
        return CompatGraph(std::move(s));
    }

    double er_edge_probability(std::size_t n)
    {
        if (n < 2)
            return std::numeric_limits<double>::quiet_NaN();
        const double x = static_cast<double>(n);
        return std::log(std::log(x)) / (2.0 * (x - 1.0));
    }

    SimpleGraph er_network(const ErSpec &spec)
    {
        const double p = er_edge_probability(spec.n);
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("er_network: n = " + std::to_string(spec.n) +
                              " gives an edge probability outside (0, 1)");
        require_rate(spec.lambda, true, "er_network: lambda");
        require_rate(spec.mu, false, "er_network: mu");

        // Walk the strictly lower triangle row by row, jumping over absent pairs.
        Stream rng = Stream::derive(spec.seed, streams::graph, 0);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        std::size_t v = 1;
        std::size_t w = geometric_gap(rng, p);
        while (v < spec.n)
        {
            while (v < spec.n && w >= v)
            {
                w -= v;
                ++v;
            }
            if (v >= spec.n)
                break;
            edges.emplace_back(w, v);
            w += 1 + geometric_gap(rng, p);
        }
        return SimpleGraph(spec.n, std::move(edges), std::vector<double>(spec.n, spec.lambda),
                           std::vector<double>(spec.n, spec.mu));
    }

    CompatGraph to_bipartite(const SimpleGraph &sg, nlohmann::json provenance)
    {
        const std::size_t n = sg.num_nodes();
        GraphSpec s;
        s.num_dispatchers = n;
        s.num_servers = n;
        s.edges.reserve(n + 2 * sg.num_edges());
        for (std::size_t v = 0; v < n; ++v)
            s.edges.emplace_back(v, v);
        for (const auto &[a, b] : sg.edges())
        {
            s.edges.emplace_back(a, b);
            s.edges.emplace_back(b, a);
        }
        s.arrival_rate.resize(n);
        s.service_rate.resize(n);
        for (std::size_t v = 0; v < n; ++v)
        {
            s.arrival_rate[v] = sg.arrival_rate(v);
            s.service_rate[v] = sg.service_rate(v);
        }
        s.provenance = std::move(provenance);
        return CompatGraph(std::move(s));
    }

    CompatGraph pod_expand(const CompatGraph &g, std::size_t d_sample, std::size_t cap)
    {
        if (d_sample < 1)
            throw DomainError("pod_expand: d_sample must be >= 1");
        std::size_t total = 0;
        for (DispatcherId e = 0; e < g.num_dispatchers(); ++e)
        {
            const std::size_t k = g.dispatcher_degree(e);
            const std::size_t parts = k >= d_sample ? binomial(k, d_sample) : 1;
            if (parts > cap || total > cap - parts)
                throw SizeError("pod_expand: expansion exceeds the cap of " + std::to_string(cap) +
                                " sub-dispatchers");
            total += parts;
        }

        GraphSpec s;
        s.num_dispatchers = total;
        s.num_servers = g.num_servers();
        s.arrival_rate.reserve(total);
        std::vector<std::size_t> pick;
        DispatcherId next = 0;
        for (DispatcherId e = 0; e < g.num_dispatchers(); ++e)
        {
            const auto nbrs = g.dispatcher_neighbors(e);
            const std::size_t k = nbrs.size();
            if (k < d_sample)
            {
                for (ServerId u : nbrs)
                    s.edges.emplace_back(next, u);
                s.arrival_rate.push_back(g.arrival_rate(e));
                ++next;
                continue;
            }
            const double rate = g.arrival_rate(e) / static_cast<double>(binomial(k, d_sample));
            pick.resize(d_sample);
            for (std::size_t i = 0; i < d_sample; ++i)
                pick[i] = i;
            while (true)
            {
                for (std::size_t i : pick)
                    s.edges.emplace_back(next, nbrs[i]);
                s.arrival_rate.push_back(rate);
                ++next;
                // Advance to the next combination in lexicographic order.
                std::size_t i = d_sample;
                while (i > 0 && pick[i - 1] == k - d_sample + i - 1)
                    --i;
                if (i == 0)
                    break;
                ++pick[i - 1];
                for (std::size_t j = i; j < d_sample; ++j)
                    pick[j] = pick[j - 1] + 1;
            }
        }
        s.service_rate.assign(g.service_rates().begin(), g.service_rates().end());
        s.departure_partition = g.singleton_partition() ? std::vector<std::vector<ServerId>>{} : g.blocks();
        for (ServerId u = 0; u < g.num_servers(); ++u)
            if (!g.server_group(u).empty())
            {
                s.server_group.resize(g.num_servers());
                for (ServerId v = 0; v < g.num_servers(); ++v)
                    s.server_group[v] = g.server_group(v);
                break;
            }
        s.provenance = {{"family", "pod-expand"}, {"d_sample", d_sample}, {"source", g.provenance()}};
        return CompatGraph(std::move(s));
    }
}
