#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skewnet/errors.hpp"
#include "skewnet/generators.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>

using namespace skewnet;

TEST_CASE("dandelion shape")
{
    auto g = dandelion({.n = 5, .b = 3, .c = 4, .lambda = 2.85, .mu = 1.0});
    CHECK(g.num_dispatchers() == 5);
    CHECK(g.num_servers() == 19);
    for (DispatcherId d = 0; d < 5; ++d)
        CHECK(g.dispatcher_degree(d) == 7);
    for (ServerId u = 0; u < 4; ++u)
    {
        CHECK(g.server_degree(u) == 5);
        CHECK(g.server_group(u) == "central");
    }
    for (ServerId u = 4; u < 19; ++u)
    {
        CHECK(g.server_degree(u) == 1);
        CHECK(g.server_neighbors(u)[0] == (u - 4) / 3);
        CHECK(g.server_group(u) == "boundary");
    }
    CHECK(g.singleton_partition());

    auto mm1 = dandelion({.n = 1, .b = 1, .c = 0, .lambda = 0.5, .mu = 1.0});
    CHECK(mm1.num_dispatchers() == 1);
    CHECK(mm1.num_servers() == 1);
    CHECK(mm1.num_edges() == 1);

    auto small = dandelion({.n = 2, .b = 1, .c = 1});
    CHECK(small.num_servers() == 3);
    CHECK(small.dispatcher_degree(0) == 2);
    CHECK(small.dispatcher_degree(1) == 2);
}

TEST_CASE("dandelion validation")
{
    CHECK_THROWS_AS(dandelion({.n = 0}), DomainError);
    CHECK_THROWS_AS(dandelion({.n = 1, .b = 0}), DomainError);
    CHECK_THROWS_AS(dandelion({.n = 2, .b = 3, .c = 1, .lambda = 3.0, .mu = 1.0, .strict_ergodic = true}),
                    DomainError);
    CHECK_NOTHROW(dandelion({.n = 2, .b = 3, .c = 1, .lambda = 2.99, .mu = 1.0, .strict_ergodic = true}));
}

TEST_CASE("dandelion invariants over a parameter grid")
{
    for (std::size_t n = 1; n <= 6; ++n)
        for (std::size_t b = 1; b <= 4; ++b)
            for (std::size_t c = 0; c <= 4; ++c)
            {
                auto g = dandelion({.n = n, .b = b, .c = c});
                for (DispatcherId d = 0; d < n; ++d)
                    CHECK(g.dispatcher_degree(d) == b + c);
                for (ServerId u = c; u < g.num_servers(); ++u)
                    CHECK(g.server_degree(u) == 1);
            }
}

TEST_CASE("remove_central")
{
    auto g = remove_central(dandelion({.n = 5, .b = 3, .c = 4}));
    auto comp = connected_components(g);
    CHECK(comp.count == 5);
    CHECK(g.num_servers() == 15);
    for (DispatcherId d = 0; d < 5; ++d)
        CHECK(g.dispatcher_degree(d) == 3);

    auto basic = remove_central(dandelion({.n = 1, .b = 2, .c = 1}));
    CHECK(basic.num_dispatchers() == 1);
    CHECK(basic.num_servers() == 2);

    for (std::size_t n = 1; n <= 10; ++n)
        CHECK(connected_components(remove_central(dandelion({.n = n, .b = 2, .c = 3}))).count == n);

    CHECK_THROWS_AS(remove_central(testing_support::complete_bipartite(2, 2, 0.5, 1.0)), DomainError);
}

TEST_CASE("cdn_network")
{
    auto g = cdn_network({.clusters = 1000});
    CHECK(g.num_dispatchers() == 11000);
    std::size_t max_deg = 0;
    for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
        max_deg = std::max(max_deg, g.dispatcher_degree(d));
    CHECK(max_deg == 110);
    const double total = std::accumulate(g.arrival_rates().begin(), g.arrival_rates().end(), 0.0);
    CHECK(total == doctest::Approx(0.9 * 1000 * 10).epsilon(1e-12));
    // T1 rate is five times the rate of each single-edge dispatcher.
    CHECK(g.arrival_rate(0) == doctest::Approx(5 * g.arrival_rate(1)));
    CHECK(g.arrival_rate(0) == doctest::Approx(3.0));
    CHECK(g.arrival_rate(1) == doctest::Approx(0.6));

    auto solo = cdn_network({.clusters = 1, .origin_count = 0});
    CHECK(solo.num_dispatchers() == 11);
    CHECK(solo.num_servers() == 10);
    const double load = std::accumulate(solo.arrival_rates().begin(), solo.arrival_rates().end(), 0.0);
    CHECK(load == doctest::Approx(0.9 * 10));
    CHECK(solo.dispatcher_degree(0) == 10);
    CHECK(solo.dispatcher_degree(1) == 1);

    CHECK_THROWS_AS(cdn_network({.clusters = 0}), DomainError);
    CHECK_THROWS_AS(cdn_network({.rho = 1.0}), DomainError);
}

TEST_CASE("cdn origin servers see every dispatcher as skewed")
{
    const CdnSpec spec{.clusters = 20, .edge_per_cluster = 10, .origin_count = 100};
    auto g = cdn_network(spec);
    const double lmin = *std::min_element(g.arrival_rates().begin(), g.arrival_rates().end());
    const SkewParams alpha{spec.edge_per_cluster + spec.origin_count, lmin, spec.mu};
    for (ServerId u = 0; u < spec.origin_count; ++u)
        CHECK(n_alpha(g, u, alpha).size() == g.num_dispatchers());
}

TEST_CASE("random_bipartite edge probability")
{
    // Dedicated servers leave the shared block unconditioned, so its degree is Binomial(10, 0.2).
    const int samples = 10000;
    double sum = 0;
    for (int s = 0; s < samples; ++s)
    {
        auto g = random_bipartite({.n = 10, .b = 2, .seed = static_cast<std::uint64_t>(s), .stabilize = true});
        sum += static_cast<double>(g.num_edges() - 10) / 10.0;
    }
    const double mean = sum / samples;
    const double sigma = std::sqrt(10 * 0.2 * 0.8 / 10.0 / samples);
    CHECK(std::abs(mean - 2.0) < 3 * sigma);
}

TEST_CASE("random_bipartite stabilization adds one dedicated server per dispatcher")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        auto plain = random_bipartite({.n = 30, .b = 2, .seed = seed, .stabilize = true});
        CHECK(plain.num_servers() == 60);
        for (DispatcherId d = 0; d < 30; ++d)
        {
            auto nb = plain.dispatcher_neighbors(d);
            CHECK(nb.back() == 30 + d);
            CHECK(plain.server_degree(30 + d) == 1);
        }
        std::size_t shared_edges = 0;
        for (const auto &[d, u] : plain.edges())
            shared_edges += u < 30;
        CHECK(plain.num_edges() == shared_edges + 30);
    }
    // Same seed: the shared block is identical with and without dedicated servers when no row is redrawn.
    auto with = random_bipartite({.n = 50, .b = 49, .seed = 4, .stabilize = true});
    auto without = random_bipartite({.n = 50, .b = 49, .seed = 4, .stabilize = false});
    for (DispatcherId d = 0; d < 50; ++d)
        CHECK(with.dispatcher_degree(d) == without.dispatcher_degree(d) + 1);
}

TEST_CASE("random_bipartite corner cases")
{
    auto full = random_bipartite({.n = 6, .b = 6, .seed = 1});
    CHECK(full.num_edges() == 36);
    auto sparse = random_bipartite({.n = 100, .b = 0.05, .seed = 2});
    for (DispatcherId d = 0; d < 100; ++d)
        CHECK(sparse.dispatcher_degree(d) >= 1);
    CHECK_THROWS_AS(random_bipartite({.n = 3, .b = 4}), DomainError);
    CHECK_THROWS_AS(random_bipartite({.n = 3, .b = 0}), DomainError);
    CHECK(random_bipartite({.n = 40, .b = 3, .seed = 9}) == random_bipartite({.n = 40, .b = 3, .seed = 9}));
}

TEST_CASE("stabilized random instances satisfy the capacity condition")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed)
    {
        auto g = random_bipartite({.n = 10, .b = 1.5, .seed = seed, .stabilize = true, .lambda = 0.9, .mu = 1.0});
        CHECK(check_ergodicity_exact(g).status == Stability::ergodic);
    }
}

TEST_CASE("er_network and to_bipartite")
{
    SimpleGraph tri(3, {{0, 1}, {1, 2}, {0, 2}}, {0.5, 0.5, 0.5}, {1.0, 1.0, 1.0});
    auto b = to_bipartite(tri);
    for (DispatcherId d = 0; d < 3; ++d)
        CHECK(b.dispatcher_degree(d) == 3);

    auto sg = er_network({.n = 500, .seed = 8});
    auto bg = to_bipartite(sg);
    for (std::size_t v = 0; v < 500; ++v)
    {
        CHECK(bg.dispatcher_degree(v) == sg.degree(v) + 1);
        CHECK(bg.has_edge(v, v));
    }

    CHECK_THROWS_AS(er_network({.n = 2}), DomainError);
    CHECK_NOTHROW(er_network({.n = 3}));
    CHECK(er_edge_probability(16) > 0.0);
}

TEST_CASE("er_network mean degree")
{
    const std::size_t n = 10000;
    const int samples = 100;
    const double p = er_edge_probability(n);
    double sum = 0;
    for (int s = 0; s < samples; ++s)
    {
        auto sg = er_network({.n = n, .seed = static_cast<std::uint64_t>(s)});
        sum += 2.0 * static_cast<double>(sg.num_edges()) / n;
    }
    const double expected = std::log(std::log(static_cast<double>(n))) / 2.0;
    const double pairs = n * (n - 1) / 2.0;
    const double sigma = 2.0 / n * std::sqrt(pairs * p * (1 - p)) / std::sqrt(samples);
    CHECK(std::abs(sum / samples - expected) < 3 * sigma);
}

TEST_CASE("pod_expand")
{
    auto g = testing_support::make_graph(1, 3, {{0, 0}, {0, 1}, {0, 2}}, {0.9}, {1.0, 1.0, 1.0});
    auto e = pod_expand(g, 2);
    REQUIRE(e.num_dispatchers() == 3);
    CHECK(neighborhood_of_dispatcher(e, 0) == ServerSet{0, 1});
    CHECK(neighborhood_of_dispatcher(e, 1) == ServerSet{0, 2});
    CHECK(neighborhood_of_dispatcher(e, 2) == ServerSet{1, 2});
    for (DispatcherId d = 0; d < 3; ++d)
        CHECK(e.arrival_rate(d) == doctest::Approx(0.3));

    auto d = dandelion({.n = 3, .b = 2, .c = 1, .lambda = 1.2});
    auto same = pod_expand(d, 3);
    CHECK(same.edges() == d.edges());
    for (DispatcherId k = 0; k < 3; ++k)
        CHECK(same.arrival_rate(k) == d.arrival_rate(k));

    auto cdn = cdn_network({.clusters = 3, .origin_count = 4});
    for (std::size_t ds : {1, 2, 3, 5})
    {
        auto x = pod_expand(cdn, ds);
        const double before = std::accumulate(cdn.arrival_rates().begin(), cdn.arrival_rates().end(), 0.0);
        const double after = std::accumulate(x.arrival_rates().begin(), x.arrival_rates().end(), 0.0);
        CHECK(after == doctest::Approx(before).epsilon(1e-12));
        for (DispatcherId k = 0; k < x.num_dispatchers(); ++k)
            CHECK(x.dispatcher_degree(k) <= ds);
    }

    CHECK_THROWS_AS(pod_expand(g, 0), DomainError);
    CHECK_THROWS_AS(pod_expand(cdn_network({.clusters = 2}), 4, 1000), SizeError);
    CHECK(binomial(110, 2) == 5995);
    CHECK(binomial(5, 7) == 0);
}
