#include "skewnet/exact.hpp"

#include "skewnet/errors.hpp"
#include "skewnet/generators.hpp"
#include "skewnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/SparseLU>

namespace skewnet
{
    namespace
    {
        // Odometer over the truncated box, server 0 least significant.
        struct Odometer
        {
            std::vector<unsigned> x;
            unsigned K;

            void next()
            {
                for (auto &v : x)
                {
                    if (v < K)
                    {
                        ++v;
                        return;
                    }
                    v = 0;
                }
            }
        };

        unsigned min_over(std::span<const ServerId> servers, const std::vector<unsigned> &x)
        {
            unsigned m = x[servers[0]];
            for (ServerId u : servers)
                m = std::min(m, x[u]);
            return m;
        }
    }

    std::size_t TruncatedChain::index(std::span<const std::int64_t> x) const
    {
        if (x.size() != stride_.size())
            throw DomainError("state has the wrong number of servers");
        std::size_t i = 0;
        for (std::size_t u = 0; u < x.size(); ++u)
        {
            if (x[u] < 0 || x[u] > static_cast<std::int64_t>(k_))
                throw DomainError("state lies outside the truncated box");
            i += static_cast<std::size_t>(x[u]) * stride_[u];
        }
        return i;
    }

    QueueState TruncatedChain::state(std::size_t i) const
    {
        QueueState x(stride_.size());
        for (std::size_t u = 0; u < x.size(); ++u)
            x[u] = coordinate(i, u);
        return x;
    }

    TruncatedChain build_generator(const CompatGraph &g, unsigned K, std::size_t state_cap)
    {
        if (!g.singleton_partition())
            throw UnsupportedStructure("exact solves need independent departure clocks (singleton partition)");
        if (K < 1)
            throw DomainError("truncation cap K must be >= 1");
        const std::size_t ns = g.num_servers();
        TruncatedChain ch;
        ch.stride_.resize(ns);
        std::size_t n = 1;
        for (std::size_t u = 0; u < ns; ++u)
        {
            ch.stride_[u] = n;
            if (n > state_cap / (K + 1))
                throw SizeError("truncated chain has more than " + std::to_string(state_cap) + " states");
            n *= K + 1;
        }
        ch.g_ = g;
        ch.k_ = K;
        ch.n_states_ = n;

        Generator a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        a.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(n), static_cast<int>(2 * ns + 1)));
        std::vector<std::pair<std::size_t, double>> row;
        Odometer od{std::vector<unsigned>(ns, 0), K};
        for (std::size_t i = 0; i < n; ++i, od.next())
        {
            row.clear();
            for (DispatcherId d = 0; d < g.num_dispatchers(); ++d)
            {
                const double lam = g.arrival_rate(d);
                if (lam == 0.0)
                    continue;
                const auto nb = g.dispatcher_neighbors(d);
                const unsigned m = min_over(nb, od.x);
                std::size_t ties = 0;
                for (ServerId u : nb)
                    ties += od.x[u] == m;
                if (m == K)
                    continue; // every minimizer is full: the arrival is blocked
                for (ServerId u : nb)
                    if (od.x[u] == m)
                        row.emplace_back(i + ch.stride_[u], lam / static_cast<double>(ties));
            }
            for (ServerId u = 0; u < ns; ++u)
                if (od.x[u] > 0)
                    row.emplace_back(i - ch.stride_[u], g.service_rate(u));
            double out = 0.0;
            for (const auto &[j, r] : row)
                out += r;
            row.emplace_back(i, -out);
            std::sort(row.begin(), row.end(), [](const auto &p, const auto &q) { return p.first < q.first; });
            std::size_t w = 0;
            for (std::size_t k = 0; k < row.size(); ++k)
            {
                if (w > 0 && row[w - 1].first == row[k].first)
                    row[w - 1].second += row[k].second;
                else
                    row[w++] = row[k];
            }
            row.resize(w);
            for (const auto &[j, r] : row)
                a.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
        }
        a.makeCompressed();
        ch.a_ = std::move(a);
        return ch;
    }

    namespace
    {
        // Gauss-Seidel sweeps on the balance equations pi(j) (-A(j,j)) = sum_{i != j} pi(i) A(i,j),
        // renormalized every few sweeps. Stops once the residual reaches a thousandth of the target
        // or stops improving below the target.
        Eigen::VectorXd gauss_seidel(const Generator &a, const SolveOptions &opts, std::size_t &sweeps)
        {
            const Generator at = a.transpose();
            const Eigen::Index n = a.rows();
            Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
            double best = std::numeric_limits<double>::infinity();
            std::size_t stall = 0;
            for (sweeps = 1; sweeps <= opts.max_iterations; ++sweeps)
            {
                for (Eigen::Index j = 0; j < n; ++j)
                {
                    double inflow = 0.0, diag = 0.0;
                    for (Generator::InnerIterator it(at, j); it; ++it)
                    {
                        if (it.col() == j)
                            diag = it.value();
                        else
                            inflow += it.value() * pi(it.col());
                    }
                    pi(j) = diag < 0.0 ? inflow / -diag : pi(j);
                }
                if (sweeps % 10 != 0)
                    continue;
                pi /= pi.sum();
                const double r = (at * pi).cwiseAbs().maxCoeff();
                if (r <= 1e-3 * opts.residual_target)
                    break;
                if (r < 0.999 * best)
                {
                    best = r;
                    stall = 0;
                }
                else if (++stall >= 20 && r <= opts.residual_target)
                    break;
            }
            return pi;
        }
    }

    StationaryDist stationary(const Generator &a, const SolveOptions &opts)
    {
        const auto n = static_cast<Eigen::Index>(a.rows());
        if (n < 1 || a.cols() != n)
            throw DomainError("generator must be square and nonempty");
        StationaryDist res;
        Eigen::VectorXd pi(n);
        if (n == 1)
            pi(0) = 1.0;
        else if (static_cast<std::size_t>(n) > opts.direct_limit)
        {
            pi = gauss_seidel(a, opts, res.iterations);
            res.method = "gauss-seidel";
        }
        else
        {
            // Fix pi(0) = 1 and solve the remaining balance equations: M y = -A(0, 1:)^T with M = A(1:, 1:)^T.
            using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(a.nonZeros()));
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Generator::InnerIterator it(a, i); it; ++it)
                {
                    const Eigen::Index j = it.col();
                    if (j == 0)
                        continue;
                    if (i == 0)
                        rhs(j - 1) = -it.value();
                    else
                        trips.emplace_back(j - 1, i - 1, it.value());
                }
            ColMatrix m(n - 1, n - 1);
            m.setFromTriplets(trips.begin(), trips.end());
            trips.clear();
            trips.shrink_to_fit();

            {
                Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
                lu.compute(m);
                if (lu.info() != Eigen::Success)
                    throw NumericError("sparse LU factorization failed: " + lu.lastErrorMessage(),
                                       std::numeric_limits<double>::infinity());
                pi(0) = 1.0;
                pi.tail(n - 1) = lu.solve(rhs);
                res.method = "sparse-lu";
            }
        }
        // Round-off can leave tiny negative entries.
        pi = pi.cwiseMax(0.0);
        pi /= pi.sum();
        res.residual = (a.transpose() * pi).cwiseAbs().maxCoeff();
        res.pi = std::move(pi);
        if (!(res.residual <= opts.residual_target))
            throw NumericError("stationary solve (" + res.method + ") reached residual " +
                                   std::to_string(res.residual) + ", above the target",
                               res.residual);
        return res;
    }

    StationaryDist stationary(const TruncatedChain &chain, const SolveOptions &opts)
    {
        StationaryDist res = stationary(chain.generator(), opts);
        const unsigned K = chain.cap();
        const std::size_t ns = chain.graph().num_servers();
        for (std::size_t i = 0; i < chain.num_states(); ++i)
            for (ServerId u = 0; u < ns; ++u)
                if (chain.coordinate(i, u) == K)
                {
                    res.boundary_mass += res.pi(static_cast<Eigen::Index>(i));
                    break;
                }
        return res;
    }

    double drift(const TruncatedChain &chain, std::span<const double> f, std::size_t x)
    {
        const CompatGraph &g = chain.graph();
        const unsigned K = chain.cap();
        std::vector<unsigned> occ(g.num_servers());
        for (ServerId u = 0; u < occ.size(); ++u)
            occ[u] = chain.coordinate(x, u);
        const double fx = f[x];
        double total = 0.0;
        for (ServerId u = 0; u < occ.size(); ++u)
        {
            // Increment term: every dispatcher that would route to u.
            if (occ[u] < K)
            {
                const double up = f[x + chain.stride(u)] - fx;
                for (DispatcherId d : g.server_neighbors(u))
                {
                    const auto nb = g.dispatcher_neighbors(d);
                    const unsigned m = min_over(nb, occ);
                    if (occ[u] != m)
                        continue;
                    std::size_t ties = 0;
                    for (ServerId v : nb)
                        ties += occ[v] == m;
                    total += up * g.arrival_rate(d) / static_cast<double>(ties);
                }
            }
            if (occ[u] > 0)
                total += (f[x - chain.stride(u)] - fx) * g.service_rate(u);
        }
        return total;
    }

    std::vector<double> drift_all(const TruncatedChain &chain, std::span<const double> f)
    {
        if (f.size() != chain.num_states())
            throw DomainError("function table does not match the state count");
        std::vector<double> out(chain.num_states());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = drift(chain, f, i);
        return out;
    }

    std::vector<double> tabulate(const TruncatedChain &chain, const std::function<double(const QueueState &)> &f)
    {
        std::vector<double> out(chain.num_states());
        QueueState x(chain.graph().num_servers(), 0);
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            out[i] = f(x);
            for (auto &v : x)
            {
                if (v < static_cast<std::int64_t>(chain.cap()))
                {
                    ++v;
                    break;
                }
                v = 0;
            }
        }
        return out;
    }

    std::vector<double> random_bounded_function(const TruncatedChain &chain, std::uint64_t seed)
    {
        std::vector<double> out(chain.num_states());
        const std::uint64_t key = splitmix64(seed ^ 0xd1b54a32d192ed03ULL);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = 2.0 * static_cast<double>(splitmix64(key + i) >> 11) * 0x1.0p-53 - 1.0;
        return out;
    }

    double check_zero_mean_drift(const TruncatedChain &chain, const StationaryDist &pi, std::span<const double> f)
    {
        const auto af = drift_all(chain, f);
        double e = 0.0;
        for (std::size_t i = 0; i < af.size(); ++i)
            e += pi.pi(static_cast<Eigen::Index>(i)) * af[i];
        return std::abs(e);
    }

    double prob_in_argmin(const TruncatedChain &chain, const StationaryDist &pi, DispatcherId d, ServerId u)
    {
        const CompatGraph &g = chain.graph();
        if (d >= g.num_dispatchers() || u >= g.num_servers())
            throw DomainError("unknown dispatcher or server");
        const auto nb = g.dispatcher_neighbors(d);
        if (!g.has_edge(d, u))
            return 0.0;
        double p = 0.0;
        for (std::size_t i = 0; i < chain.num_states(); ++i)
        {
            const unsigned xu = chain.coordinate(i, u);
            bool minimal = true;
            for (ServerId v : nb)
                if (chain.coordinate(i, v) < xu)
                {
                    minimal = false;
                    break;
                }
            if (minimal)
                p += pi.pi(static_cast<Eigen::Index>(i));
        }
        return p;
    }

    MinRateCheck check_min_rate_inequality(const TruncatedChain &chain, const StationaryDist &pi, ServerId u)
    {
        const CompatGraph &g = chain.graph();
        if (u >= g.num_servers())
            throw DomainError("unknown server " + std::to_string(u));
        MinRateCheck r;
        r.server = u;
        r.mu = g.service_rate(u);
        for (DispatcherId d : g.server_neighbors(u))
        {
            const double p = prob_in_argmin(chain, pi, d, u);
            r.dispatchers.push_back(d);
            r.p_min.push_back(p);
            r.lhs += g.arrival_rate(d) / static_cast<double>(g.dispatcher_degree(d)) * p;
        }
        r.holds = r.lhs <= r.mu + 1e-9;
        return r;
    }

    std::vector<double> marginal(const TruncatedChain &chain, const StationaryDist &pi,
                                 std::span<const ServerId> coords)
    {
        const std::size_t base = chain.cap() + 1;
        std::size_t size = 1;
        for (ServerId u : coords)
        {
            if (u >= chain.graph().num_servers())
                throw DomainError("unknown server " + std::to_string(u));
            size *= base;
        }
        std::vector<double> out(size, 0.0);
        for (std::size_t i = 0; i < chain.num_states(); ++i)
        {
            std::size_t j = 0, w = 1;
            for (ServerId u : coords)
            {
                j += chain.coordinate(i, u) * w;
                w *= base;
            }
            out[j] += pi.pi(static_cast<Eigen::Index>(i));
        }
        return out;
    }

    double total_variation(std::span<const double> p, std::span<const double> q)
    {
        if (p.size() != q.size())
            throw DomainError("total variation needs laws on the same space");
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            s += std::abs(p[i] - q[i]);
        return 0.5 * s;
    }

    BasicLaw basic_jsq_stationary(std::size_t b, double lambda, double mu, unsigned K, std::size_t state_cap,
                                  const SolveOptions &opts)
    {
        if (b < 1)
            throw DomainError("basic process needs b >= 1");
        if (!(lambda < static_cast<double>(b) * mu))
            throw DomainError("basic process needs lambda < b * mu");
        const CompatGraph g = dandelion({.n = 1, .b = b, .c = 0, .lambda = lambda, .mu = mu});
        const TruncatedChain chain = build_generator(g, K, state_cap);
        BasicLaw law;
        law.b = b;
        law.K = K;
        law.dist = stationary(chain, opts);
        const ServerId first = 0;
        law.server_marginal = marginal(chain, law.dist, std::span<const ServerId>(&first, 1));
        for (std::size_t k = 0; k < law.server_marginal.size(); ++k)
            law.mean_queue += static_cast<double>(k) * law.server_marginal[k];
        return law;
    }

    SymmetricBasicLaw basic_jsq_symmetric(std::size_t b, double lambda, double mu, unsigned K,
                                          std::size_t state_cap, const SolveOptions &opts)
    {
        if (b < 1)
            throw DomainError("basic process needs b >= 1");
        if (!(lambda > 0.0 && mu > 0.0 && lambda < static_cast<double>(b) * mu))
            throw DomainError("basic process needs 0 < lambda < b * mu");
        if (K < 1)
            throw DomainError("truncation level K must be >= 1");

        // Enumerate nondecreasing tuples over {0..K} in odometer order.
        using Tuple = std::vector<unsigned>;
        std::vector<Tuple> states;
        std::map<Tuple, std::size_t> index;
        Tuple y(b, 0);
        for (;;)
        {
            if (states.size() >= state_cap)
                throw SizeError("symmetric basic chain exceeds the state cap of " + std::to_string(state_cap));
            index.emplace(y, states.size());
            states.push_back(y);
            std::size_t i = b;
            while (i > 0 && y[i - 1] == K)
                --i;
            if (i == 0)
                break;
            const unsigned v = y[i - 1] + 1;
            for (std::size_t j = i - 1; j < b; ++j)
                y[j] = v;
        }

        const std::size_t n = states.size();
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(n * (b + 2));
        for (std::size_t s = 0; s < n; ++s)
        {
            const Tuple &x = states[s];
            double out = 0.0;
            // The arrival joins a shortest queue: bump the last entry equal to the minimum.
            if (x[0] < K)
            {
                std::size_t last = 0;
                while (last + 1 < b && x[last + 1] == x[0])
                    ++last;
                Tuple z = x;
                ++z[last];
                trips.emplace_back(s, index.at(z), lambda);
                out += lambda;
            }
            // Servers sharing a level depart at rate mu each; decrement the first of the run.
            for (std::size_t i = 0; i < b;)
            {
                std::size_t j = i;
                while (j < b && x[j] == x[i])
                    ++j;
                if (x[i] > 0)
                {
                    Tuple z = x;
                    --z[i];
                    const double rate = mu * static_cast<double>(j - i);
                    trips.emplace_back(s, index.at(z), rate);
                    out += rate;
                }
                i = j;
            }
            trips.emplace_back(s, s, -out);
        }
        Generator a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        a.setFromTriplets(trips.begin(), trips.end());

        SymmetricBasicLaw law;
        law.b = b;
        law.K = K;
        law.states = n;
        const StationaryDist dist = stationary(a, opts);
        law.residual = dist.residual;
        law.server_marginal.assign(K + 1, 0.0);
        for (std::size_t s = 0; s < n; ++s)
        {
            const double p = dist.pi(static_cast<Eigen::Index>(s));
            if (states[s][b - 1] == K)
                law.boundary_mass += p;
            for (unsigned v : states[s])
                law.server_marginal[v] += p / static_cast<double>(b);
        }
        for (unsigned k = 0; k <= K; ++k)
            law.mean_queue += k * law.server_marginal[k];
        return law;
    }

    std::vector<ConvergenceRow> check_theorem2_convergence(const std::vector<std::size_t> &n_list, std::size_t b,
                                                           std::size_t c, double lambda, double mu, unsigned K,
                                                           std::size_t state_cap, const SolveOptions &opts)
    {
        const BasicLaw basic = basic_jsq_stationary(b, lambda, mu, K, state_cap, opts);
        const std::vector<double> basic_law(basic.dist.pi.data(), basic.dist.pi.data() + basic.dist.pi.size());
        std::vector<ConvergenceRow> rows;
        for (std::size_t n : n_list)
        {
            const CompatGraph g = dandelion({.n = n, .b = b, .c = c, .lambda = lambda, .mu = mu});
            const TruncatedChain chain = build_generator(g, K, state_cap);
            const StationaryDist pi = stationary(chain, opts);
            ConvergenceRow row;
            row.n = n;
            row.states = chain.num_states();
            row.boundary_mass = pi.boundary_mass;
            row.residual = pi.residual;

            auto block = [&](DispatcherId d)
            {
                std::vector<ServerId> s(b);
                for (std::size_t j = 0; j < b; ++j)
                    s[j] = c + d * b + j;
                return s;
            };
            row.marginal_tv = total_variation(marginal(chain, pi, block(0)), basic_law);
            if (n >= 2)
            {
                auto both = block(0);
                const auto second = block(1);
                both.insert(both.end(), second.begin(), second.end());
                const auto joint = marginal(chain, pi, both);
                std::vector<double> product(joint.size());
                const std::size_t side = basic_law.size();
                for (std::size_t i = 0; i < side; ++i)
                    for (std::size_t j = 0; j < side; ++j)
                        product[i + side * j] = basic_law[i] * basic_law[j];
                row.joint_tv = total_variation(joint, product);
            }

            // C meets M(d,X) iff the central minimum is no larger than the boundary minimum of d.
            for (std::size_t i = 0; i < chain.num_states() && c > 0; ++i)
            {
                unsigned cmin = K;
                for (ServerId u = 0; u < c; ++u)
                    cmin = std::min(cmin, chain.coordinate(i, u));
                double hits = 0.0;
                for (DispatcherId d = 0; d < n; ++d)
                {
                    unsigned bmin = K;
                    for (std::size_t j = 0; j < b; ++j)
                        bmin = std::min(bmin, chain.coordinate(i, c + d * b + j));
                    hits += cmin <= bmin;
                }
                row.expected_m += hits * pi.pi(static_cast<Eigen::Index>(i));
            }
            row.m_bound = mu * static_cast<double>(b + c) * static_cast<double>(c) / lambda;
            for (ServerId u = 0; u < g.num_servers(); ++u)
                row.min_rate.push_back(check_min_rate_inequality(chain, pi, u));
            if (c > 0)
                for (DispatcherId d = 0; d < n; ++d)
                    row.p_central_min.push_back(prob_in_argmin(chain, pi, d, 0));
            row.central_bound = mu * static_cast<double>(b + c) / (lambda * static_cast<double>(n));
            rows.push_back(std::move(row));
        }
        return rows;
    }
}
