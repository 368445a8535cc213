#pragma once

#include "skewnet/compat_graph.hpp"

#include <cstdint>

namespace skewnet
{
    // n dispatchers sharing c central servers, each with b private boundary servers.
    struct DandelionSpec
    {
        std::size_t n = 1;
        std::size_t b = 1;
        std::size_t c = 0;
        double lambda = 0.5;
        double mu = 1.0;
        bool strict_ergodic = false; // reject lambda >= mu * b

        void validate() const;
    };

    // Server ids: central 0..c-1 (group "central"), then boundary c + d*b + j (group "boundary").
    CompatGraph dandelion(const DandelionSpec &spec);

    // Deletes the central servers of a dandelion, leaving n single-dispatcher components.
    CompatGraph remove_central(const CompatGraph &g);

    struct CdnSpec
    {
        std::size_t clusters = 1;
        std::size_t edge_per_cluster = 10;
        std::size_t origin_count = 100;
        double rho = 0.9;
        double tier1_rate_multiplier = 5.0;
        double mu = 1.0;

        void validate() const;
    };

    // Origin servers first (group "origin"), then edge servers cluster by cluster (group "edge").
    // Per cluster: one tier-1 dispatcher over every cluster edge server and all origins, then
    // one dispatcher per edge server over that server and all origins.
    CompatGraph cdn_network(const CdnSpec &spec);

    struct RandomBipartiteSpec
    {
        std::size_t n = 1;
        double b = 1.0;
        std::uint64_t seed = 0;
        bool stabilize = false;
        double lambda = 0.5;
        double mu = 1.0;

        void validate() const;
    };

    // Each of the n*n edges present with probability b/n. Without stabilize, a dispatcher row
    // that comes out empty is redrawn; with stabilize, dispatcher d also gets server n+d.
    CompatGraph random_bipartite(const RandomBipartiteSpec &spec);

    struct ErSpec
    {
        std::size_t n = 3;
        std::uint64_t seed = 0;
        double lambda = 0.5;
        double mu = 1.0;
    };

    // log(log n) / (2(n-1)); not clamped.
    double er_edge_probability(std::size_t n);

    // G(n, p_n) with p_n from er_edge_probability; p_n outside (0, 1) is a DomainError.
    SimpleGraph er_network(const ErSpec &spec);

    // Every node becomes a dispatcher and a server, compatible with itself and its neighbors.
    CompatGraph to_bipartite(const SimpleGraph &sg, nlohmann::json provenance = nullptr);

    inline constexpr std::size_t default_expansion_cap = 1'000'000;

    // Power-of-d sampling without replacement as JSQ on an expanded graph: dispatcher e with
    // deg(e) >= d_sample becomes one sub-dispatcher per d_sample-subset of N(e), in lexicographic
    // order, each with rate lambda(e) / C(deg(e), d_sample).
    CompatGraph pod_expand(const CompatGraph &g, std::size_t d_sample,
                           std::size_t cap = default_expansion_cap);

    // Saturates at SIZE_MAX.
    std::size_t binomial(std::size_t n, std::size_t k) noexcept;
}
