#pragma once

#include "skewnet/compat_graph.hpp"
#include "skewnet/occupancy.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace skewnet
{
    inline constexpr std::size_t default_state_cap = 5'000'000;

    using Generator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    // The chain restricted to {0..K}^S with arrivals that would exceed K removed.
    // State index: sum over servers of x(u) * (K+1)^u.
    class TruncatedChain
    {
    public:
        const CompatGraph &graph() const noexcept { return g_; }
        unsigned cap() const noexcept { return k_; }
        std::size_t num_states() const noexcept { return n_states_; }
        std::size_t stride(ServerId u) const noexcept { return stride_[u]; }
        const Generator &generator() const noexcept { return a_; }

        std::size_t index(std::span<const std::int64_t> x) const;
        QueueState state(std::size_t i) const;
        unsigned coordinate(std::size_t i, ServerId u) const noexcept
        {
            return static_cast<unsigned>(i / stride_[u] % (k_ + 1));
        }

    private:
        friend TruncatedChain build_generator(const CompatGraph &, unsigned, std::size_t);
        CompatGraph g_;
        unsigned k_ = 0;
        std::size_t n_states_ = 0;
        std::vector<std::size_t> stride_;
        Generator a_;
    };

    // Requires a singleton departure partition (UnsupportedStructure otherwise) and
    // (K+1)^S <= state_cap (SizeError otherwise).
    TruncatedChain build_generator(const CompatGraph &g, unsigned K, std::size_t state_cap = default_state_cap);

    struct StationaryDist
    {
        Eigen::VectorXd pi;
        double boundary_mass = 0.0; // probability that some server holds K tasks
        double residual = 0.0;      // infinity norm of pi * A
        std::string method;         // "sparse-lu" or "gauss-seidel"
        std::size_t iterations = 0;
    };

    struct SolveOptions
    {
        // Sparse LU fill-in grows quickly on these lattices; larger chains use Gauss-Seidel sweeps.
        std::size_t direct_limit = 5'000;
        double residual_target = 1e-10;
        std::size_t max_iterations = 200'000; // sweeps
    };

    // Solves pi A = 0, sum(pi) = 1. NumericError when the residual target is missed.
    StationaryDist stationary(const TruncatedChain &chain, const SolveOptions &opts = {});
    // Same on a bare generator; boundary_mass is left at 0.
    StationaryDist stationary(const Generator &a, const SolveOptions &opts = {});

    // Af(x) evaluated from the graph: arrival terms over minimizing candidates with blocked
    // increments at K contributing nothing, plus departure terms at nonempty servers.
    // f holds one value per state index.
    double drift(const TruncatedChain &chain, std::span<const double> f, std::size_t x);
    std::vector<double> drift_all(const TruncatedChain &chain, std::span<const double> f);

    // Values of a function of the state on every index.
    std::vector<double> tabulate(const TruncatedChain &chain, const std::function<double(const QueueState &)> &f);

    // Bounded pseudo-random function with values in [-1, 1], fixed by the seed.
    std::vector<double> random_bounded_function(const TruncatedChain &chain, std::uint64_t seed);

    // |E_pi[Af]|.
    double check_zero_mean_drift(const TruncatedChain &chain, const StationaryDist &pi, std::span<const double> f);

    struct MinRateCheck
    {
        ServerId server = 0;
        double lhs = 0.0; // sum over d in N(u) of lambda(d)/|N(d)| * P(u in M(d,X))
        double mu = 0.0;
        bool holds = false; // lhs <= mu + 1e-9
        std::vector<DispatcherId> dispatchers;
        std::vector<double> p_min; // P(u in M(d,X)) per dispatcher above
    };

    MinRateCheck check_min_rate_inequality(const TruncatedChain &chain, const StationaryDist &pi, ServerId u);

    // P(u in M(d,X)) under pi.
    double prob_in_argmin(const TruncatedChain &chain, const StationaryDist &pi, DispatcherId d, ServerId u);

    // Law of (X(coords[0]), X(coords[1]), ...) indexed with coords[0] least significant.
    std::vector<double> marginal(const TruncatedChain &chain, const StationaryDist &pi,
                                 std::span<const ServerId> coords);

    double total_variation(std::span<const double> p, std::span<const double> q);

    struct BasicLaw
    {
        std::size_t b = 0;
        unsigned K = 0;
        StationaryDist dist;         // over (K+1)^b states, server j least significant
        std::vector<double> server_marginal; // law of X(0)
        double mean_queue = 0.0;     // per server
    };

    // One dispatcher, b servers, JSQ: the law that isolated dandelion components approach.
    BasicLaw basic_jsq_stationary(std::size_t b, double lambda, double mu, unsigned K,
                                  std::size_t state_cap = default_state_cap, const SolveOptions &opts = {});

    struct SymmetricBasicLaw
    {
        std::size_t b = 0;
        unsigned K = 0;
        std::size_t states = 0;
        double boundary_mass = 0.0;
        double residual = 0.0;
        std::vector<double> server_marginal;
        double mean_queue = 0.0;
    };

    // The basic process lumped over server permutations: states are sorted occupancy vectors,
    // C(K+b, b) of them instead of (K+1)^b. Reaches caps where the full lattice is too slow, and
    // the direct solve stays cheap on it well past the lattice limit.
    SymmetricBasicLaw basic_jsq_symmetric(std::size_t b, double lambda, double mu, unsigned K,
                                          std::size_t state_cap = default_state_cap,
                                          const SolveOptions &opts = {.direct_limit = 200'000});

    struct ConvergenceRow
    {
        std::size_t n = 0;
        std::size_t states = 0;
        double boundary_mass = 0.0;
        double residual = 0.0;
        double marginal_tv = 0.0;  // block of dispatcher 0 vs basic law
        double joint_tv = std::numeric_limits<double>::quiet_NaN(); // blocks 0 and 1 vs product of basic laws
        double expected_m = 0.0;   // E[#{d : C meets M(d,X)}]
        double m_bound = 0.0;      // mu (b + c) c / lambda
        std::vector<MinRateCheck> min_rate;     // every server
        std::vector<double> p_central_min;      // P(c0 in M(d,X)) per dispatcher
        double central_bound = 0.0;             // mu (b + c) / (lambda n)
    };

    // Exact dandelion solves for each n, compared with the basic law at the same cap.
    std::vector<ConvergenceRow> check_theorem2_convergence(const std::vector<std::size_t> &n_list, std::size_t b,
                                                           std::size_t c, double lambda, double mu, unsigned K,
                                                           std::size_t state_cap = default_state_cap,
                                                           const SolveOptions &opts = {});
}
