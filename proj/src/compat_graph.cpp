#include "skewnet/compat_graph.hpp"

#include "skewnet/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

namespace skewnet
{
    namespace
    {
        bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

        std::string id_str(std::size_t id) { return std::to_string(id); }

        // Ascending merge-intersection of two sorted id lists.
        std::vector<std::size_t> intersect_sorted(std::span<const std::size_t> a, std::span<const std::size_t> b)
        {
            std::vector<std::size_t> out;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
            return out;
        }
    }

    CompatGraph::CompatGraph(GraphSpec spec)
    {
        const std::size_t nd = spec.num_dispatchers;
        const std::size_t ns = spec.num_servers;
        if (spec.arrival_rate.size() != nd)
            throw DomainError("arrival_rate has " + id_str(spec.arrival_rate.size()) + " entries, expected " + id_str(nd));
        if (spec.service_rate.size() != ns)
            throw DomainError("service_rate has " + id_str(spec.service_rate.size()) + " entries, expected " + id_str(ns));
        for (std::size_t d = 0; d < nd; ++d)
        {
            const double l = spec.arrival_rate[d];
            if (!std::isfinite(l) || l < 0.0)
                throw DomainError("arrival_rate of dispatcher " + id_str(d) + " must be finite and nonnegative");
        }
        for (std::size_t u = 0; u < ns; ++u)
            if (!positive_finite(spec.service_rate[u]))
                throw DomainError("service_rate of server " + id_str(u) + " must be finite and positive");

        disp_nbrs_.assign(nd, {});
        server_nbrs_.assign(ns, {});
        for (const auto &[d, u] : spec.edges)
        {
            if (d >= nd)
                throw DomainError("edge references unknown dispatcher " + id_str(d));
            if (u >= ns)
                throw DomainError("edge references unknown server " + id_str(u));
            disp_nbrs_[d].push_back(u);
        }
        for (std::size_t d = 0; d < nd; ++d)
        {
            auto &nb = disp_nbrs_[d];
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            if (nb.empty())
                throw DomainError("dispatcher " + id_str(d) + " has no compatible server");
            for (ServerId u : nb)
                server_nbrs_[u].push_back(d);
            num_edges_ += nb.size();
        }

        arrival_ = std::move(spec.arrival_rate);
        service_ = std::move(spec.service_rate);

        block_of_.assign(ns, ns);
        if (spec.departure_partition.empty())
        {
            blocks_.resize(ns);
            for (ServerId u = 0; u < ns; ++u)
            {
                blocks_[u] = {u};
                block_of_[u] = u;
            }
        }
        else
        {
            for (auto block : spec.departure_partition)
            {
                if (block.empty())
                    throw DomainError("departure_partition contains an empty block");
                std::sort(block.begin(), block.end());
                for (ServerId u : block)
                {
                    if (u >= ns)
                        throw DomainError("departure_partition references unknown server " + id_str(u));
                    if (block_of_[u] != ns)
                        throw DomainError("server " + id_str(u) + " appears in two departure blocks");
                    block_of_[u] = blocks_.size();
                }
                for (ServerId u : block)
                    if (service_[u] != service_[block.front()])
                        throw DomainError("departure block containing server " + id_str(u) + " has unequal service rates");
                blocks_.push_back(std::move(block));
            }
            for (ServerId u = 0; u < ns; ++u)
                if (block_of_[u] == ns)
                    throw DomainError("server " + id_str(u) + " is missing from departure_partition");
            // Canonical order: blocks sorted by their smallest member.
            std::vector<std::size_t> order(blocks_.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
                      { return blocks_[a].front() < blocks_[b].front(); });
            std::vector<std::vector<ServerId>> sorted;
            sorted.reserve(blocks_.size());
            for (std::size_t k : order)
                sorted.push_back(std::move(blocks_[k]));
            blocks_ = std::move(sorted);
            for (std::size_t k = 0; k < blocks_.size(); ++k)
                for (ServerId u : blocks_[k])
                    block_of_[u] = k;
        }

        if (spec.server_group.empty())
            groups_.assign(ns, std::string{});
        else if (spec.server_group.size() != ns)
            throw DomainError("server_group has " + id_str(spec.server_group.size()) + " entries, expected " + id_str(ns));
        else
            groups_ = std::move(spec.server_group);

        provenance_ = std::move(spec.provenance);
    }

    bool CompatGraph::has_edge(DispatcherId d, ServerId u) const noexcept
    {
        if (d >= disp_nbrs_.size())
            return false;
        const auto &nb = disp_nbrs_[d];
        return std::binary_search(nb.begin(), nb.end(), u);
    }

    std::vector<std::string> CompatGraph::group_names() const
    {
        std::vector<std::string> names;
        for (const auto &g : groups_)
            if (std::find(names.begin(), names.end(), g) == names.end())
                names.push_back(g);
        return names;
    }

    std::vector<std::pair<DispatcherId, ServerId>> CompatGraph::edges() const
    {
        std::vector<std::pair<DispatcherId, ServerId>> out;
        out.reserve(num_edges_);
        for (DispatcherId d = 0; d < disp_nbrs_.size(); ++d)
            for (ServerId u : disp_nbrs_[d])
                out.emplace_back(d, u);
        return out;
    }

    GraphSpec CompatGraph::spec() const
    {
        GraphSpec s;
        s.num_dispatchers = num_dispatchers();
        s.num_servers = num_servers();
        s.edges = edges();
        s.arrival_rate = arrival_;
        s.service_rate = service_;
        if (!singleton_partition())
            s.departure_partition = blocks_;
        s.server_group = groups_;
        s.provenance = provenance_;
        return s;
    }

    bool CompatGraph::operator==(const CompatGraph &o) const
    {
        return disp_nbrs_ == o.disp_nbrs_ && arrival_ == o.arrival_ && service_ == o.service_ &&
               blocks_ == o.blocks_ && groups_ == o.groups_ && provenance_ == o.provenance_;
    }

    void SkewParams::validate() const
    {
        if (a < 1)
            throw DomainError("alpha.a must be >= 1");
        if (!positive_finite(lambda_min))
            throw DomainError("alpha.lambda_min must be positive");
        if (!positive_finite(mu_max))
            throw DomainError("alpha.mu_max must be positive");
    }

    SimpleGraph::SimpleGraph(std::size_t num_nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
                             std::vector<double> arrival_rate, std::vector<double> service_rate)
        : adj_(num_nodes), arrival_(std::move(arrival_rate)), service_(std::move(service_rate))
    {
        if (arrival_.size() != num_nodes || service_.size() != num_nodes)
            throw DomainError("simple graph rate maps must cover every node");
        for (std::size_t v = 0; v < num_nodes; ++v)
        {
            if (!std::isfinite(arrival_[v]) || arrival_[v] < 0.0)
                throw DomainError("arrival_rate of node " + id_str(v) + " must be finite and nonnegative");
            if (!positive_finite(service_[v]))
                throw DomainError("service_rate of node " + id_str(v) + " must be finite and positive");
        }
        for (auto [a, b] : edges)
        {
            if (a >= num_nodes || b >= num_nodes)
                throw DomainError("simple graph edge references an unknown node");
            if (a == b)
                throw DomainError("simple graph edge is a self-loop at node " + id_str(a));
            if (a > b)
                std::swap(a, b);
            edges_.emplace_back(a, b);
        }
        std::sort(edges_.begin(), edges_.end());
        if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
            throw DomainError("simple graph has a duplicate edge");
        for (auto [a, b] : edges_)
        {
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
        for (auto &nb : adj_)
            std::sort(nb.begin(), nb.end());
    }

    ServerSet neighborhood_of_dispatcher(const CompatGraph &g, DispatcherId d)
    {
        if (d >= g.num_dispatchers())
            throw DomainError("unknown dispatcher " + id_str(d));
        auto nb = g.dispatcher_neighbors(d);
        return {nb.begin(), nb.end()};
    }

    DispatcherSet neighborhood_of_server(const CompatGraph &g, ServerId u)
    {
        if (u >= g.num_servers())
            throw DomainError("unknown server " + id_str(u));
        auto nb = g.server_neighbors(u);
        return {nb.begin(), nb.end()};
    }

    namespace
    {
        bool dispatcher_qualifies(const CompatGraph &g, DispatcherId d, const SkewParams &alpha)
        {
            if (g.dispatcher_degree(d) > alpha.a || g.arrival_rate(d) < alpha.lambda_min)
                return false;
            for (ServerId v : g.dispatcher_neighbors(d))
                if (g.service_rate(v) > alpha.mu_max)
                    return false;
            return true;
        }
    }

    DispatcherSet n_alpha(const CompatGraph &g, ServerId u, const SkewParams &alpha)
    {
        if (u >= g.num_servers())
            throw DomainError("unknown server " + id_str(u));
        alpha.validate();
        DispatcherSet out;
        for (DispatcherId d : g.server_neighbors(u))
            if (dispatcher_qualifies(g, d, alpha))
                out.push_back(d);
        return out;
    }

    DispatcherSet n_alpha_joint(const CompatGraph &g, std::span<const ServerId> servers, const SkewParams &alpha)
    {
        if (servers.empty())
            throw DomainError("n_alpha_joint requires a nonempty server set");
        for (ServerId u : servers)
            if (u >= g.num_servers())
                throw DomainError("unknown server " + id_str(u));
        DispatcherSet acc = n_alpha(g, servers.front(), alpha);
        for (std::size_t i = 1; i < servers.size() && !acc.empty(); ++i)
            acc = intersect_sorted(acc, g.server_neighbors(servers[i]));
        return acc;
    }

    Components connected_components(const CompatGraph &g)
    {
        constexpr std::size_t unset = static_cast<std::size_t>(-1);
        Components c;
        c.dispatcher_label.assign(g.num_dispatchers(), unset);
        c.server_label.assign(g.num_servers(), unset);
        std::vector<DispatcherId> stack;
        for (DispatcherId root = 0; root < g.num_dispatchers(); ++root)
        {
            if (c.dispatcher_label[root] != unset)
                continue;
            const std::size_t label = c.count++;
            c.dispatcher_label[root] = label;
            stack.push_back(root);
            while (!stack.empty())
            {
                const DispatcherId d = stack.back();
                stack.pop_back();
                for (ServerId u : g.dispatcher_neighbors(d))
                {
                    if (c.server_label[u] != unset)
                        continue;
                    c.server_label[u] = label;
                    for (DispatcherId e : g.server_neighbors(u))
                        if (c.dispatcher_label[e] == unset)
                        {
                            c.dispatcher_label[e] = label;
                            stack.push_back(e);
                        }
                }
            }
        }
        for (ServerId u = 0; u < g.num_servers(); ++u)
            if (c.server_label[u] == unset)
                c.server_label[u] = c.count++;
        return c;
    }

    ServerId max_degree_server(const CompatGraph &g)
    {
        if (g.num_servers() == 0)
            throw DomainError("graph has no servers");
        ServerId best = 0;
        for (ServerId u = 1; u < g.num_servers(); ++u)
            if (g.server_degree(u) > g.server_degree(best))
                best = u;
        return best;
    }

    const char *to_string(Stability s) noexcept
    {
        switch (s)
        {
        case Stability::ergodic:
            return "ergodic";
        case Stability::unstable:
            return "unstable";
        case Stability::inconclusive:
            return "inconclusive";
        }
        return "?";
    }

    ErgodicityResult check_ergodicity_exact(const CompatGraph &g, std::size_t server_cap)
    {
        const std::size_t ns = g.num_servers();
        if (ns > server_cap || ns >= 63)
            throw SizeError("exact ergodicity check enumerates 2^" + id_str(ns) + " subsets, above the cap of " +
                            id_str(server_cap) + " servers; use check_ergodicity_simple or a larger cap");
        const std::uint64_t full = (std::uint64_t{1} << ns);

        // confined[U] = sum of lambda(d) over d whose neighborhood lies inside U (subset-sum transform).
        std::vector<double> confined(full, 0.0);
        for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
        {
            std::uint64_t mask = 0;
            for (ServerId u : g.dispatcher_neighbors(d))
                mask |= std::uint64_t{1} << u;
            confined[mask] += g.arrival_rate(d);
        }
        for (std::size_t bit = 0; bit < ns; ++bit)
            for (std::uint64_t m = 0; m < full; ++m)
                if (m & (std::uint64_t{1} << bit))
                    confined[m] += confined[m ^ (std::uint64_t{1} << bit)];

        std::vector<double> capacity(full, 0.0);
        for (std::uint64_t m = 1; m < full; ++m)
        {
            const int low = std::countr_zero(m);
            capacity[m] = capacity[m & (m - 1)] + g.service_rate(static_cast<ServerId>(low));
        }

        auto to_set = [&](std::uint64_t m)
        {
            ServerSet s;
            for (ServerId u = 0; u < ns; ++u)
                if (m & (std::uint64_t{1} << u))
                    s.push_back(u);
            return s;
        };

        ErgodicityResult res;
        res.status = Stability::ergodic;
        std::uint64_t equality = 0;
        for (std::uint64_t m = 1; m < full; ++m)
        {
            ++res.subsets_checked;
            const double lhs = confined[m];
            const double rhs = capacity[m];
            const double tol = 1e-12 * std::max(1.0, lhs + rhs);
            if (lhs > rhs + tol)
            {
                res.status = Stability::unstable;
                res.witness = to_set(m);
                res.witness_arrival = lhs;
                res.witness_service = rhs;
                return res;
            }
            if (equality == 0 && std::abs(lhs - rhs) <= tol)
                equality = m;
        }
        if (equality != 0)
        {
            res.status = Stability::inconclusive;
            res.witness = to_set(equality);
            res.witness_arrival = confined[equality];
            res.witness_service = capacity[equality];
        }
        return res;
    }

    bool check_ergodicity_simple(const SimpleGraph &sg)
    {
        for (std::size_t v = 0; v < sg.num_nodes(); ++v)
            if (!(sg.arrival_rate(v) < sg.service_rate(v)))
                return false;
        return true;
    }

    DispatcherSet greedy_skew_subset(const CompatGraph &g, std::span<const ServerId> core,
                                     std::span<const DispatcherId> candidates)
    {
        ServerSet u_sorted(core.begin(), core.end());
        std::sort(u_sorted.begin(), u_sorted.end());
        DispatcherSet b(candidates.begin(), candidates.end());
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        for (DispatcherId d : b)
            if (d >= g.num_dispatchers())
                throw DomainError("unknown dispatcher " + id_str(d));

        auto in_core = [&](ServerId u)
        { return std::binary_search(u_sorted.begin(), u_sorted.end(), u); };

        // Overlap outside the core exists iff the sorted neighborhoods share a non-core server.
        auto conflicts = [&](DispatcherId d, DispatcherId e)
        {
            auto a = g.dispatcher_neighbors(d);
            auto c = g.dispatcher_neighbors(e);
            auto i = a.begin();
            auto j = c.begin();
            while (i != a.end() && j != c.end())
            {
                if (*i < *j)
                    ++i;
                else if (*j < *i)
                    ++j;
                else
                {
                    if (!in_core(*i))
                        return true;
                    ++i;
                    ++j;
                }
            }
            return false;
        };

        enum class Color : unsigned char
        {
            none,
            green,
            red
        };
        std::vector<Color> color(b.size(), Color::none);
        DispatcherSet green;
        for (std::size_t i = 0; i < b.size(); ++i)
        {
            if (color[i] != Color::none)
                continue;
            color[i] = Color::green;
            green.push_back(b[i]);
            // Candidates that can conflict with b[i] share a non-core server with it.
            for (ServerId u : g.dispatcher_neighbors(b[i]))
            {
                if (in_core(u))
                    continue;
                for (DispatcherId e : g.server_neighbors(u))
                {
                    auto it = std::lower_bound(b.begin(), b.end(), e);
                    if (it == b.end() || *it != e)
                        continue;
                    const std::size_t j = static_cast<std::size_t>(it - b.begin());
                    if (color[j] == Color::none && conflicts(b[i], e))
                        color[j] = Color::red;
                }
            }
        }
        return green;
    }

    SkewedCore find_skewed_core(const CompatGraph &g, ServerId u0, const SkewParams &alpha, double drop_fraction)
    {
        if (u0 >= g.num_servers())
            throw DomainError("unknown server " + id_str(u0));
        if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0))
            throw DomainError("drop_fraction must lie in [0, 1]");
        alpha.validate();

        SkewedCore core;
        core.order.push_back(u0);
        core.servers.push_back(u0);
        DispatcherSet joint = n_alpha(g, u0, alpha);

        std::vector<std::size_t> count(g.num_servers(), 0);
        while (core.order.size() < alpha.a && !joint.empty())
        {
            // |n_alpha_joint(U + {u})| = number of current joint dispatchers compatible with u.
            std::fill(count.begin(), count.end(), 0);
            for (DispatcherId d : joint)
                for (ServerId u : g.dispatcher_neighbors(d))
                    ++count[u];
            std::size_t best = g.num_servers();
            for (ServerId u = 0; u < g.num_servers(); ++u)
            {
                if (std::binary_search(core.servers.begin(), core.servers.end(), u))
                    continue;
                if (best == g.num_servers() || count[u] > count[best])
                    best = u;
            }
            if (best == g.num_servers())
                break;
            if (static_cast<double>(count[best]) < drop_fraction * static_cast<double>(joint.size()) || count[best] == 0)
                break;
            core.order.push_back(best);
            core.servers.insert(std::lower_bound(core.servers.begin(), core.servers.end(), best), best);
            joint = intersect_sorted(joint, g.server_neighbors(best));
        }
        core.joint = joint;
        core.dispatchers = greedy_skew_subset(g, core.servers, core.joint);
        return core;
    }
}
