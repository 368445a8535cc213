#pragma once

#include "skewnet/compat_graph.hpp"

#include <cstdint>
#include <vector>

// Small graph builders shared by the unit tests.
namespace testing_support
{
    using namespace skewnet;

    inline CompatGraph make_graph(std::size_t nd, std::size_t ns, std::vector<std::pair<DispatcherId, ServerId>> edges,
                                  std::vector<double> lambda, std::vector<double> mu,
                                  std::vector<std::vector<ServerId>> partition = {})
    {
        GraphSpec s;
        s.num_dispatchers = nd;
        s.num_servers = ns;
        s.edges = std::move(edges);
        s.arrival_rate = std::move(lambda);
        s.service_rate = std::move(mu);
        s.departure_partition = std::move(partition);
        return CompatGraph(std::move(s));
    }

    inline CompatGraph complete_bipartite(std::size_t nd, std::size_t ns, double lambda, double mu)
    {
        std::vector<std::pair<DispatcherId, ServerId>> e;
        for (DispatcherId d = 0; d < nd; ++d)
            for (ServerId u = 0; u < ns; ++u)
                e.emplace_back(d, u);
        return make_graph(nd, ns, std::move(e), std::vector<double>(nd, lambda), std::vector<double>(ns, mu));
    }
}
