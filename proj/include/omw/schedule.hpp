#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "omw/types.hpp"

namespace omw {

/// CRAB ansatz: g_i(t) = (1/m) sum_k A(k,i) sin(2 pi k (1 + r_k) t / T), g0 constant.
struct CrabParams {
    int m = 1;
    Eigen::MatrixXd amplitudes; ///< m x n, units of g0
    Eigen::VectorXd r;          ///< m values in [0, 1]
    double g0_fixed = 1.0;
    std::uint64_t seed = 0;
};

/// Shape of the microwave couplings inside one piecewise segment, as a function
/// of the fraction x in [0, 1] of the segment elapsed.
struct Profile {
    enum class Kind { flat, sine_bump, harmonic };
    Kind kind = Kind::flat;
    double active_fraction = 1.0; ///< sine_bump: bump occupies [0, active_fraction)
    Eigen::VectorXd a;            ///< harmonic amplitudes
    Eigen::VectorXd r;            ///< harmonic randomization

    double value(double x) const;
};

/// g0 is held at g(0) for the whole segment; g_j(t) = g(j) * profile(x) for j >= 1.
struct Segment {
    double duration = 0.0;
    Eigen::VectorXd g;
    Profile profile;
};

struct PiecewiseParams {
    std::vector<Segment> segments;
};

/// g_j(t) = f(t) g_j(0) with f(t) = 1 + sum_k e_k sin(2 pi k t / T).
struct ConstantRatioParams {
    Eigen::VectorXd g_initial;
    Eigen::VectorXd envelope;
    double envelope_value(double t, double T) const;
};

/// Time-dependent couplings g0(t)..gn(t) on [0, T].
class CouplingSchedule {
public:
    enum class Kind { crab, piecewise, constant_ratio };

    static CouplingSchedule crab(double T, CrabParams params);
    static CouplingSchedule piecewise(std::vector<Segment> segments);
    static CouplingSchedule constant_ratio(double T, Eigen::VectorXd g_initial,
                                           Eigen::VectorXd envelope = {});

    Kind kind() const;
    double duration() const { return T_; }
    int n() const { return n_; }
    bool reversed() const { return reversed_; }

    CouplingVector<> sample(double t) const;

    /// Couplings at the RK4 nodes k*T/(2N), k = 0..2N, as an (n+1) x (2N+1) matrix.
    Eigen::MatrixXd sample_half_grid(int N) const;

    /// g'(t) = g(T - t).
    CouplingSchedule time_reversed() const;

    const CrabParams& crab_params() const { return std::get<CrabParams>(params_); }
    const PiecewiseParams& piecewise_params() const { return std::get<PiecewiseParams>(params_); }
    const ConstantRatioParams& constant_ratio_params() const
    {
        return std::get<ConstantRatioParams>(params_);
    }

    friend bool operator==(const CouplingSchedule& a, const CouplingSchedule& b);

private:
    using Params = std::variant<CrabParams, PiecewiseParams, ConstantRatioParams>;
    CouplingSchedule(double T, int n, Params params) : T_(T), n_(n), params_(std::move(params)) {}

    CouplingVector<> sample_forward(double t) const;

    double T_;
    int n_;
    Params params_;
    bool reversed_ = false;
};

} // namespace omw
