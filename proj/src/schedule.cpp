#include "omw/schedule.hpp"

#include <cmath>
#include <numbers>

namespace omw {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

bool vec_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return a.size() == b.size() && (a.size() == 0 || a == b);
}

bool mat_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

} // namespace

double Profile::value(double x) const
{
    switch (kind) {
    case Kind::flat:
        return 1.0;
    case Kind::sine_bump:
        return x < active_fraction ? std::sin(std::numbers::pi * x / active_fraction) : 0.0;
    case Kind::harmonic: {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < a.size(); ++k)
            acc += a(k) * std::sin(two_pi * double(k + 1) * (1.0 + r(k)) * x);
        return a.size() ? acc / double(a.size()) : 0.0;
    }
    }
    return 0.0;
}

double ConstantRatioParams::envelope_value(double t, double T) const
{
    double f = 1.0;
    for (Eigen::Index k = 0; k < envelope.size(); ++k)
        f += envelope(k) * std::sin(two_pi * double(k + 1) * t / T);
    return f;
}

CouplingSchedule CouplingSchedule::crab(double T, CrabParams params)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw Error("CRAB schedule: T must be > 0");
    if (params.m < 1 || params.amplitudes.rows() != params.m || params.amplitudes.cols() < 1)
        throw Error("CRAB schedule: amplitudes must be m x n with m, n >= 1");
    if (params.r.size() != params.m)
        throw Error("CRAB schedule: r must have m entries");
    if ((params.r.array() < 0.0).any() || (params.r.array() > 1.0).any())
        throw Error("CRAB schedule: r_k must lie in [0, 1]");
    if (!params.amplitudes.allFinite() || !std::isfinite(params.g0_fixed))
        throw Error("CRAB schedule: non-finite parameters");
    const int n = int(params.amplitudes.cols());
    return CouplingSchedule(T, n, std::move(params));
}

CouplingSchedule CouplingSchedule::piecewise(std::vector<Segment> segments)
{
    if (segments.empty())
        throw Error("piecewise schedule: no segments");
    const Eigen::Index dim = segments.front().g.size();
    if (dim < 2)
        throw Error("piecewise schedule: coupling vectors need n+1 >= 2 entries");
    double T = 0.0;
    for (const auto& s : segments) {
        if (!(s.duration > 0.0) || s.g.size() != dim || !s.g.allFinite())
            throw Error("piecewise schedule: invalid segment");
        if (s.profile.kind == Profile::Kind::harmonic && s.profile.a.size() != s.profile.r.size())
            throw Error("piecewise schedule: harmonic profile needs matching a and r");
        if (s.profile.kind == Profile::Kind::sine_bump
            && !(s.profile.active_fraction > 0.0 && s.profile.active_fraction <= 1.0))
            throw Error("piecewise schedule: active_fraction must lie in (0, 1]");
        T += s.duration;
    }
    return CouplingSchedule(T, int(dim) - 1, PiecewiseParams{std::move(segments)});
}

CouplingSchedule CouplingSchedule::constant_ratio(double T, Eigen::VectorXd g_initial,
                                                  Eigen::VectorXd envelope)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw Error("constant-ratio schedule: T must be > 0");
    if (g_initial.size() < 2 || !g_initial.allFinite())
        throw Error("constant-ratio schedule: need finite g with n+1 >= 2 entries");
    if (envelope.size() && envelope.cwiseAbs().sum() >= 1.0)
        throw Error("constant-ratio schedule: envelope must keep f(t) > 0");
    const int n = int(g_initial.size()) - 1;
    return CouplingSchedule(T, n, ConstantRatioParams{std::move(g_initial), std::move(envelope)});
}

CouplingSchedule::Kind CouplingSchedule::kind() const
{
    switch (params_.index()) {
    case 0:
        return Kind::crab;
    case 1:
        return Kind::piecewise;
    default:
        return Kind::constant_ratio;
    }
}

CouplingVector<> CouplingSchedule::sample(double t) const
{
    const double slack = 1e-12 * T_;
    if (!(t >= -slack && t <= T_ + slack))
        throw Error("schedule sampled outside [0, T]: t = " + std::to_string(t));
    t = std::clamp(t, 0.0, T_);
    return sample_forward(reversed_ ? T_ - t : t);
}

CouplingVector<> CouplingSchedule::sample_forward(double t) const
{
    CouplingVector<> g(n_ + 1);
    if (const auto* c = std::get_if<CrabParams>(&params_)) {
        g(0) = c->g0_fixed;
        Eigen::VectorXd basis(c->m);
        for (int k = 0; k < c->m; ++k)
            basis(k) = std::sin(two_pi * double(k + 1) * (1.0 + c->r(k)) * t / T_);
        g.tail(n_) = c->amplitudes.transpose() * basis / double(c->m);
    } else if (const auto* p = std::get_if<PiecewiseParams>(&params_)) {
        double start = 0.0;
        const Segment* seg = &p->segments.back();
        for (const auto& s : p->segments) {
            if (t < start + s.duration) {
                seg = &s;
                break;
            }
            start += s.duration;
        }
        if (seg == &p->segments.back())
            start = T_ - seg->duration;
        const double x = std::clamp((t - start) / seg->duration, 0.0, 1.0);
        g = seg->g;
        g.tail(n_) *= seg->profile.value(x);
    } else {
        const auto& c = std::get<ConstantRatioParams>(params_);
        g = c.g_initial * c.envelope_value(t, T_);
    }
    return g;
}

Eigen::MatrixXd CouplingSchedule::sample_half_grid(int N) const
{
    Eigen::MatrixXd out(n_ + 1, 2 * N + 1);
    const double dt = T_ / (2.0 * N);
    for (int k = 0; k <= 2 * N; ++k)
        out.col(k) = sample(k == 2 * N ? T_ : k * dt);
    return out;
}

CouplingSchedule CouplingSchedule::time_reversed() const
{
    CouplingSchedule s = *this;
    s.reversed_ = !reversed_;
    return s;
}

bool operator==(const CouplingSchedule& a, const CouplingSchedule& b)
{
    if (a.T_ != b.T_ || a.n_ != b.n_ || a.reversed_ != b.reversed_ || a.kind() != b.kind())
        return false;
    switch (a.kind()) {
    case CouplingSchedule::Kind::crab: {
        const auto &x = a.crab_params(), &y = b.crab_params();
        return x.m == y.m && mat_equal(x.amplitudes, y.amplitudes) && vec_equal(x.r, y.r)
            && x.g0_fixed == y.g0_fixed && x.seed == y.seed;
    }
    case CouplingSchedule::Kind::piecewise: {
        const auto &x = a.piecewise_params().segments, &y = b.piecewise_params().segments;
        if (x.size() != y.size())
            return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto &s = x[i], &u = y[i];
            if (s.duration != u.duration || !vec_equal(s.g, u.g) || s.profile.kind != u.profile.kind
                || s.profile.active_fraction != u.profile.active_fraction
                || !vec_equal(s.profile.a, u.profile.a) || !vec_equal(s.profile.r, u.profile.r))
                return false;
        }
        return true;
    }
    case CouplingSchedule::Kind::constant_ratio: {
        const auto &x = a.constant_ratio_params(), &y = b.constant_ratio_params();
        return vec_equal(x.g_initial, y.g_initial) && vec_equal(x.envelope, y.envelope);
    }
    }
    return false;
}

} // namespace omw
