#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "omw/dynamics.hpp"
#include "omw/schedule.hpp"
#include "omw/types.hpp"

namespace omw {

struct CrabConfig {
    int m = 6;
    double T = 100.0;
    double g0_fixed = 1.0;
    double amplitude_bound = 5.0; ///< max |A(k,i)| in units of g0
    std::uint64_t seed = 1;
    int restarts = 5;
    int max_evaluations = 2000; ///< per restart
    double initial_step = 0.5;
    int grid_N = 0;             ///< 0: TimeGrid::for_params

    /// Optional starting point for the first restart (amplitudes m x n, r).
    std::optional<Eigen::MatrixXd> warm_amplitudes;
    std::optional<Eigen::VectorXd> warm_r;

    void validate(int n) const;
};

struct OptimizationReport {
    CouplingSchedule schedule;
    std::vector<double> objective_history; ///< best-so-far, nonincreasing
    Eigen::VectorXd per_basis_residuals;   ///< ||psi_i(T)||^2 for the canonical basis states
    double objective = 0.0;                ///< sum of per_basis_residuals
    double objective_at_zero = 0.0;        ///< J(A = 0)
    int evaluations = 0;
    std::uint64_t seed = 0;
    int best_restart = 0;
    bool budget_exhausted = false;
};

/// g_i(t) = (1/m) sum_k A(k,i) sin(2 pi k (1 + r_k) t / T), g0 = cfg.g0_fixed.
CouplingSchedule crab_schedule(const CrabConfig& cfg, const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& r);

/// ||psi_i(T)||^2 for psi_i(0) = |a_i>, i = 1..n.
Eigen::VectorXd basis_residuals(const SystemParams& p, const CouplingSchedule& sched,
                                const TimeGrid& grid);

/// Minimizes J(A) = sum_i ||psi_i(T)||^2 over the CRAB amplitudes with seeded
/// Nelder-Mead restarts. Deterministic for a given config.
OptimizationReport optimize_crab(const SystemParams& p, const CrabConfig& cfg);

/// Sequential baseline: stage i of length T/n drives only g_i with a sine bump
/// over the first (1 - per_stage_margin) of the stage; g0 stays constant. The
/// bump peak is tuned once on the single-cavity problem over one stage.
CouplingSchedule trivial_schedule(const SystemParams& p, double T, double per_stage_margin = 0.1,
                                  double g0 = 1.0);

/// Sequential baseline built from a single-cavity reference schedule (crab, n = 1):
/// its g1 profile is compressed into each stage T/n in turn.
CouplingSchedule trivial_from_reference(const SystemParams& p, double T,
                                        const CouplingSchedule& single_cavity);

} // namespace omw
