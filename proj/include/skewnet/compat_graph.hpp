#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace skewnet
{
    using DispatcherId = std::size_t;
    using ServerId = std::size_t;

    // Sorted, duplicate-free id lists. Every algorithm iterates them in ascending order.
    using ServerSet = std::vector<ServerId>;
    using DispatcherSet = std::vector<DispatcherId>;

    // Raw description of a compatibility graph; validated by the CompatGraph constructor.
    struct GraphSpec
    {
        std::size_t num_dispatchers = 0;
        std::size_t num_servers = 0;
        std::vector<std::pair<DispatcherId, ServerId>> edges;
        std::vector<double> arrival_rate;                     // per dispatcher, >= 0
        std::vector<double> service_rate;                     // per server, > 0
        std::vector<std::vector<ServerId>> departure_partition; // empty means all singletons
        std::vector<std::string> server_group;                // empty means unlabelled
        nlohmann::json provenance;                            // null when absent
    };

    // Bipartite dispatcher/server compatibility structure with rates and a
    // partition of the servers into blocks that share one potential-departure clock.
    // Immutable after construction.
    class CompatGraph
    {
    public:
        CompatGraph() = default;
        explicit CompatGraph(GraphSpec spec);

        std::size_t num_dispatchers() const noexcept { return arrival_.size(); }
        std::size_t num_servers() const noexcept { return service_.size(); }
        std::size_t num_edges() const noexcept { return num_edges_; }

        // Unchecked accessors; use the free functions below for id validation.
        std::span<const ServerId> dispatcher_neighbors(DispatcherId d) const noexcept { return disp_nbrs_[d]; }
        std::span<const DispatcherId> server_neighbors(ServerId u) const noexcept { return server_nbrs_[u]; }
        std::size_t dispatcher_degree(DispatcherId d) const noexcept { return disp_nbrs_[d].size(); }
        std::size_t server_degree(ServerId u) const noexcept { return server_nbrs_[u].size(); }
        bool has_edge(DispatcherId d, ServerId u) const noexcept;

        double arrival_rate(DispatcherId d) const noexcept { return arrival_[d]; }
        double service_rate(ServerId u) const noexcept { return service_[u]; }
        std::span<const double> arrival_rates() const noexcept { return arrival_; }
        std::span<const double> service_rates() const noexcept { return service_; }

        std::size_t num_blocks() const noexcept { return blocks_.size(); }
        std::size_t block_of(ServerId u) const noexcept { return block_of_[u]; }
        std::span<const ServerId> block(std::size_t k) const noexcept { return blocks_[k]; }
        const std::vector<std::vector<ServerId>> &blocks() const noexcept { return blocks_; }
        bool singleton_partition() const noexcept { return blocks_.size() == service_.size(); }

        const std::string &server_group(ServerId u) const noexcept { return groups_[u]; }
        // Distinct group labels in order of first appearance by server id.
        std::vector<std::string> group_names() const;

        const nlohmann::json &provenance() const noexcept { return provenance_; }

        std::vector<std::pair<DispatcherId, ServerId>> edges() const;

        // Description that reconstructs an equal graph.
        GraphSpec spec() const;

        bool operator==(const CompatGraph &other) const;

    private:
        std::vector<std::vector<ServerId>> disp_nbrs_;
        std::vector<std::vector<DispatcherId>> server_nbrs_;
        std::vector<double> arrival_;
        std::vector<double> service_;
        std::vector<std::vector<ServerId>> blocks_;
        std::vector<std::size_t> block_of_;
        std::vector<std::string> groups_;
        nlohmann::json provenance_;
        std::size_t num_edges_ = 0;
    };

    // alpha = (a, lambda_min, mu_max): degree cap, arrival floor, service ceiling.
    struct SkewParams
    {
        std::size_t a = 1;
        double lambda_min = 1.0;
        double mu_max = 1.0;

        void validate() const;
    };

    // Undirected graph whose nodes act as both dispatcher and server.
    class SimpleGraph
    {
    public:
        SimpleGraph() = default;
        SimpleGraph(std::size_t num_nodes, std::vector<std::pair<std::size_t, std::size_t>> edges,
                    std::vector<double> arrival_rate, std::vector<double> service_rate);

        std::size_t num_nodes() const noexcept { return adj_.size(); }
        std::size_t num_edges() const noexcept { return edges_.size(); }
        std::span<const std::size_t> neighbors(std::size_t v) const noexcept { return adj_[v]; }
        std::size_t degree(std::size_t v) const noexcept { return adj_[v].size(); }
        // Sorted pairs with first < second.
        const std::vector<std::pair<std::size_t, std::size_t>> &edges() const noexcept { return edges_; }
        double arrival_rate(std::size_t v) const noexcept { return arrival_[v]; }
        double service_rate(std::size_t v) const noexcept { return service_[v]; }

    private:
        std::vector<std::vector<std::size_t>> adj_;
        std::vector<std::pair<std::size_t, std::size_t>> edges_;
        std::vector<double> arrival_;
        std::vector<double> service_;
    };

    ServerSet neighborhood_of_dispatcher(const CompatGraph &g, DispatcherId d);
    DispatcherSet neighborhood_of_server(const CompatGraph &g, ServerId u);

    // Dispatchers d compatible with u such that deg(d) <= a, lambda(d) >= lambda_min
    // and every server compatible with d has mu <= mu_max.
    DispatcherSet n_alpha(const CompatGraph &g, ServerId u, const SkewParams &alpha);

    // Intersection of n_alpha over a nonempty server set.
    DispatcherSet n_alpha_joint(const CompatGraph &g, std::span<const ServerId> servers, const SkewParams &alpha);

    struct Components
    {
        std::size_t count = 0;
        std::vector<std::size_t> dispatcher_label;
        std::vector<std::size_t> server_label;
    };

    // Connected components of the bipartite graph; labels are assigned in order of
    // first appearance scanning dispatchers then unreached servers by id.
    Components connected_components(const CompatGraph &g);

    // Server with the largest degree, smallest id on ties. Requires at least one server.
    ServerId max_degree_server(const CompatGraph &g);

    enum class Stability
    {
        ergodic,
        unstable,
        inconclusive,
    };

    const char *to_string(Stability s) noexcept;

    struct ErgodicityResult
    {
        Stability status = Stability::inconclusive;
        // Violating subset (unstable) or an equality subset (inconclusive); empty when ergodic.
        ServerSet witness;
        double witness_arrival = 0.0; // sum of lambda(d) over d with N(d) inside the witness
        double witness_service = 0.0; // sum of mu(u) over the witness
        std::size_t subsets_checked = 0;
    };

    inline constexpr std::size_t default_ergodicity_cap = 20;

    // Enumerates every nonempty server subset U and compares the arrival rate of
    // dispatchers confined to U with the service capacity of U. Equality is
    // decided with a relative tolerance of 1e-12.
    ErgodicityResult check_ergodicity_exact(const CompatGraph &g, std::size_t server_cap = default_ergodicity_cap);

    // lambda(v) < mu(v) at every node; a sufficient condition only.
    bool check_ergodicity_simple(const SimpleGraph &sg);

    // Greedy coloring: take the smallest uncolored dispatcher of B as green, color red every
    // uncolored e whose neighborhood overlaps the green one's outside U. Returns the greens.
    DispatcherSet greedy_skew_subset(const CompatGraph &g, std::span<const ServerId> core,
                                     std::span<const DispatcherId> candidates);

    struct SkewedCore
    {
        ServerSet servers;           // U, sorted
        std::vector<ServerId> order; // U in selection order, order[0] == u0
        DispatcherSet joint;        // n_alpha_joint(U)
        DispatcherSet dispatchers;  // A = greedy_skew_subset(U, joint)
    };

    inline constexpr double default_core_drop_fraction = 0.5;

    // Grows U from u0 by repeatedly adding the server that keeps the joint n_alpha set
    // largest; stops when that set would shrink below drop_fraction of its current size,
    // when |U| reaches a, or when no server is left.
    SkewedCore find_skewed_core(const CompatGraph &g, ServerId u0, const SkewParams &alpha,
                                double drop_fraction = default_core_drop_fraction);
}
