#pragma once

#include <optional>
#include <vector>

#include "omw/model.hpp"
#include "omw/schedule.hpp"
#include "omw/types.hpp"

namespace omw {

/// Uniform nodes t_k = k T / N, k = 0..N.
struct TimeGrid {
    double T = 1.0;
    int N = 4096;

    static constexpr int min_nodes = 512;

    static TimeGrid make(double T, int N);
    /// Default resolution N = max(4096, ceil(40 kappa0 T)).
    static TimeGrid for_params(const SystemParams& p, double T);

    double dt() const { return T / N; }
    double t(int k) const { return k == N ? T : k * dt(); }
};

/// Single-photon amplitude f(t) on a TimeGrid; |f|^2 is a photon flux.
struct PulseShape {
    TimeGrid grid;
    Eigen::VectorXcd samples; ///< N+1 values

    static PulseShape zero(const TimeGrid& grid);

    /// Trapezoid integral of |f|^2.
    double photon_content() const;
    /// Rescaled to unit photon content; zero pulses are returned unchanged.
    PulseShape normalized() const;
    /// Linear interpolation between nodes.
    Complex at(double t) const;
};

/// Per-node norm accounting. Balance:
/// norm2(k) + flux_out(k) - flux_in(k) + loss(k) = norm2(0).
struct NormLedger {
    Eigen::VectorXd norm2;
    Eigen::VectorXd flux_out; ///< cumulative integral of |f_out|^2
    Eigen::VectorXd flux_in;  ///< cumulative integral of |f_in|^2
    Eigen::VectorXd loss;     ///< cumulative decay into the kappa_i and gamma_m channels

    double imbalance(int k) const { return norm2(k) + flux_out(k) - flux_in(k) + loss(k) - norm2(0); }
    double max_imbalance() const;
};

struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXcd states; ///< (n+2) x (N+1), column k = psi(t_k)
    PulseShape emitted;
    std::optional<PulseShape> absorbed;
    NormLedger ledger;

    ExcitationState final_state() const { return states.col(states.cols() - 1); }
    double residual() const { return final_state().squaredNorm(); }
};

struct IntegratorOptions {
    /// Sign of the input source term. +1 is the physical convention; -1 is a
    /// debug switch used as a negative control for the ledger check.
    double input_sign = 1.0;
};

/// Free emission: d psi/dt = -i H_c(t) psi, f_out = sqrt(kappa0) psi_0.
Trajectory evolve_emission(const SystemParams& p, const CouplingSchedule& sched,
                           const ExcitationState& psi0, const TimeGrid& grid,
                           const IntegratorOptions& opts = {});

/// Driven evolution: d psi/dt = -i H_c(t) psi + sqrt(kappa0) f_in(t) e_a0,
/// reflected output f_out = sqrt(kappa0) psi_0 - f_in.
Trajectory evolve_injection(const SystemParams& p, const CouplingSchedule& sched,
                            const PulseShape& f_in, const ExcitationState& psi0,
                            const TimeGrid& grid, const IntegratorOptions& opts = {});

/// Final states only, for many initial states at once. `couplings` holds the
/// schedule on the half-step grid, (n+1) x (2N+1), as from sample_half_grid.
Eigen::MatrixXcd propagate_final(const SystemParams& p, const Eigen::MatrixXd& couplings,
                                 const Eigen::MatrixXcd& psi0, const TimeGrid& grid);

/// Dark coefficients c_i = <phi_i|psi> at coupling vector g.
Eigen::VectorXcd dark_projection(const CouplingVector<>& g, const ExcitationState& psi);

struct ReducedState {
    Eigen::VectorXcd C;
    std::optional<Eigen::VectorXcd> alpha; ///< U^T C where U is defined
};

struct ReducedTrajectory {
    TimeGrid grid;
    int first_node = 0;     ///< integration started at t(first_node)
    Eigen::MatrixXcd C;     ///< n x (N+1); columns before first_node are unset
    Eigen::MatrixXcd alpha; ///< n x (N+1)
    std::vector<bool> alpha_valid;

    ReducedState at(int k) const;
};

/// Dark-subspace model dC/dt = -(kappa0/2) M(t) C.
ReducedTrajectory evolve_reduced(const SystemParams& p, const CouplingSchedule& sched,
                                 const ReducedState& C0, const TimeGrid& grid);

/// Rotated-frame model d alpha/dt = -[(kappa0/2) Lambda(t) - V(t)] alpha, started
/// at the first node where phi0 is defined. alpha0 is taken at that node.
ReducedTrajectory evolve_adiabatic_frame(const SystemParams& p, const CouplingSchedule& sched,
                                         const Eigen::VectorXcd& alpha0, const TimeGrid& grid);

/// Closed-form solution for a time-independent M:
/// C(t) = C0 + (exp(-kappa0 Lambda_11 t / 2) - 1) phi0 <phi0|C0>.
/// t = +infinity gives C0 - phi0 <phi0|C0>.
ReducedState analytic_time_independent(const CouplingVector<>& g, double kappa0,
                                       const ReducedState& C0, double t);

/// f'(t) = conj f(T - t).
PulseShape time_reverse(const PulseShape& pulse);
/// g'(t) = g(T - t).
CouplingSchedule time_reverse(const CouplingSchedule& sched);

} // namespace omw
