#pragma once

#include "skewnet/compat_graph.hpp"
#include "skewnet/ctmc_sim.hpp"
#include "skewnet/occupancy.hpp"

#include <optional>
#include <variant>

#include <json.hpp>

namespace skewnet
{
    // Removes (d, u) and attaches a fresh server v to d. v shares u's departure block and rate.
    struct EdgeSimplify
    {
        DispatcherId d = 0;
        ServerId u = 0;
        std::optional<ServerId> v_new; // must be the next free id when given
    };

    // Attaches a fresh server with its own clock to d.
    struct AddServer
    {
        DispatcherId d = 0;
        std::optional<ServerId> u_new;
        double mu = 1.0;
    };

    struct DecreaseArrival
    {
        DispatcherId d = 0;
        double lambda = 0.0; // 0 < lambda <= current rate
    };

    // Raises the rate of u's whole departure block.
    struct IncreaseService
    {
        ServerId u = 0;
        double mu = 0.0; // >= current rate
    };

    using TransformOp = std::variant<EdgeSimplify, AddServer, DecreaseArrival, IncreaseService>;

    nlohmann::json to_json(const TransformOp &op);
    // Tagged record: {"op": "edge_simplify" | "add_server" | "decrease_arrival" | "increase_service", ...}.
    TransformOp transform_from_json(const nlohmann::json &j);
    std::vector<TransformOp> transforms_from_json(const nlohmann::json &j);

    // Where the servers of an original graph sit in a transformed one. `server` is the identity
    // on original ids; phi[d] lists (w, phi_d(w)) for w in the original N(d), sorted by w.
    struct ServerMap
    {
        std::vector<ServerId> server;
        std::vector<std::vector<std::pair<ServerId, ServerId>>> phi;

        ServerId apply(DispatcherId d, ServerId w) const;
    };

    ServerMap identity_map(const CompatGraph &g);
    // a maps g0 into g1, b maps g1 into g2; the result maps g0 into g2.
    ServerMap compose(const ServerMap &a, const ServerMap &b);

    struct Transformed
    {
        CompatGraph graph;
        ServerMap map;
    };

    // DomainError naming the failed clause when the op does not apply to g. A rate op that leaves
    // the rate unchanged returns g itself; anything else records the op in the provenance.
    Transformed apply_transform(const CompatGraph &g, const TransformOp &op);
    Transformed apply_transforms(const CompatGraph &g, const std::vector<TransformOp> &ops);

    // Least-occupied members of a sorted neighbor list, in ascending order.
    ServerSet minimizers(std::span<const ServerId> neighbors, const QueueState &x);

    // Coupled placement for one arrival seen by both systems. m1, m2 are the minimizer sets,
    // phi the injection for the dispatcher. With equal minima the second system's choice is drawn
    // from u_a and the first copies it through phi when it can, else draws from u_b; otherwise
    // the two are drawn independently from u_a and u_b. Marginals are uniform on m1 and m2.
    // InvariantBreach if x1(w) >= x2(phi(w)) fails before the placement or after it.
    std::pair<ServerId, ServerId> joint_dispatch(std::span<const ServerId> m1, std::span<const ServerId> m2,
                                                 const QueueState &x1, const QueueState &x2,
                                                 std::span<const std::pair<ServerId, ServerId>> phi, double u_a,
                                                 double u_b);

    struct DominanceViolation
    {
        std::uint64_t event = 0;
        double time = 0.0;
        DispatcherId dispatcher = 0; // set for per-dispatcher pairs
        bool per_dispatcher = false;
        ServerId original = 0;
        ServerId image = 0;
        std::int64_t x1 = 0;
        std::int64_t x2 = 0;
    };

    struct DominanceReport
    {
        std::uint64_t events = 0;
        std::uint64_t arrivals1 = 0, arrivals2 = 0;
        std::uint64_t departures1 = 0, departures2 = 0;
        std::uint64_t pair_checks = 0;
        std::uint64_t violations = 0; // the run stops at the first one
        std::optional<DominanceViolation> first_violation;
        std::vector<std::uint64_t> arrivals2_by_dispatcher;
        double sim_time = 0.0;
    };

    nlohmann::json to_json(const DominanceReport &r);

    struct CoupledRun
    {
        CompatGraph g2;
        ServerMap map;
        OccupancyMetrics m1, m2;
        DominanceReport report;
    };

    // Runs the original and transformed systems on one event stream. Arrivals of the second are
    // a thinning of the first's; departure ticks of the first are a thinning of the second's.
    // After every event it checks X1(w) >= X2(w) for original servers and X1(w) >= X2(phi_d(w))
    // for every dispatcher. New servers start empty.
    CoupledRun coupled_simulate(const CompatGraph &g1, const std::vector<TransformOp> &ops, const QueueState &x0,
                                const SimConfig &cfg);

    struct DandelionComponent
    {
        ServerSet central;                        // U
        DispatcherSet dispatchers;                // A
        std::vector<std::vector<ServerId>> boundary; // per dispatcher of A, ids in the transformed graph
        std::size_t a = 0;
        double lambda = 0.0;
        double mu = 0.0;
    };

    struct LowerBoundPlan
    {
        bool trivial = false; // |U| == a: no pipeline needed
        std::vector<TransformOp> ops;
        DandelionComponent component;
    };

    struct LowerBoundRates
    {
        std::optional<double> lambda; // default 0.99 lambda_min, capped at 0.99 (a - c) mu
        std::optional<double> mu;     // default 1.01 mu_max
    };

    // Rate changes on A and its servers, edge simplifications cutting every outside dispatcher
    // off the servers A sees, then server additions until each dispatcher of A has degree a.
    // Requires A inside the joint n_alpha set of U and pairwise overlaps of A's neighborhoods
    // inside U.
    LowerBoundPlan build_dandelion_lower_bound(const CompatGraph &g, std::span<const ServerId> core,
                                               std::span<const DispatcherId> dispatchers, const SkewParams &alpha,
                                               const LowerBoundRates &rates = {});

    // The component as a standalone graph laid out like dandelion(): central servers first, then
    // each dispatcher's boundary servers. DomainError unless it is an isolated dandelion with
    // independent clocks inside g2.
    CompatGraph extract_component(const CompatGraph &g2, const DandelionComponent &comp);
}
