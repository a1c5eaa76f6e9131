#pragma once

#include <optional>
#include <string>
#include <vector>

#include "omw/control.hpp"
#include "omw/dynamics.hpp"

namespace omw {

/// W_n = sum_i w_i |0..1_i..0>, unit norm.
struct WState {
    Eigen::VectorXcd w;

    explicit WState(Eigen::VectorXcd coefficients);
    int n() const { return int(w.size()); }
    ExcitationState embed() const { return embed_w(w); }
};

/// The n single-cavity states |a_i>.
std::vector<WState> canonical_w_states(int n);

/// Uniform on the complex unit sphere of dimension n, seeded.
std::vector<WState> random_w_states(int n, int count, std::uint64_t seed);

/// |<target|final>|^2, no renormalization of `final`.
double overlap_fidelity(const ExcitationState& target, const ExcitationState& final);

struct GenerationRun {
    double fidelity = 0.0;     ///< |<w|psi_gen(T)>|^2
    double transmission = 0.0; ///< photon content of the emitted pulse
    Trajectory emission;
    Trajectory injection;
    PulseShape incident; ///< unit-norm time-reversed pulse fed to the injection
};

/// Emit from conj(w) with `sched`, time-reverse the emitted pulse (normalized
/// to one photon) and the schedule, inject into the empty system and compare
/// the final state with w.
///
/// Conjugate time reversal turns the state the pulse was emitted from into its
/// complex conjugate, so emitting from conj(w) is what regenerates w. For real
/// w this is the plain emit/reverse/inject roundtrip.
GenerationRun generate_w_state(const SystemParams& p, const CouplingSchedule& sched, const WState& target,
                               const TimeGrid& grid);

/// Mean generation fidelity over `targets` (default: the canonical states).
double generation_fidelity(const SystemParams& p, const CouplingSchedule& sched,
                           const std::vector<WState>& targets = {},
                           std::optional<TimeGrid> grid = std::nullopt);

/// Fidelity of injecting an externally supplied incident pulse (already time
/// reversed) with the reversed schedule.
double injection_fidelity(const SystemParams& p, const CouplingSchedule& sched, const PulseShape& incident,
                          const WState& target);

struct SweepResult {
    std::string axis;
    std::vector<double> values;
    std::vector<double> fidelities;
    std::string method; ///< "trivial" or "optimized" (or "fixed" for damping sweeps)
    int n = 0;
};

enum class DampingAxis { kappa_i, gamma_m };

/// Generation fidelity with a fixed schedule while one damping channel is
/// swept and the other held at zero. Values are in units of g0.
SweepResult sweep_damping(const SystemParams& base, const CouplingSchedule& sched, DampingAxis axis,
                          const std::vector<double>& values, int jobs = 1);

struct TimeSweepConfig {
    std::vector<int> n_list{1, 2, 3, 4};
    std::vector<double> T_values;
    bool trivial = true;
    bool optimized = true;
    CrabConfig crab; ///< template; T is overwritten per point
    int jobs = 1;
};

/// Fidelity versus g0 T for each n. The trivial curve reuses the single-cavity
/// optimum for duration T/n compressed into each stage; the optimized curve
/// runs a CRAB optimization at every T, warm-started from the previous T.
std::vector<SweepResult> sweep_time(const SystemParams& base, const TimeSweepConfig& cfg);

/// Smallest axis value at which the curve reaches `level`, linearly
/// interpolated between samples.
std::optional<double> crossing_value(const SweepResult& curve, double level);

} // namespace omw
