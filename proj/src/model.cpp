#include "omw/model.hpp"

namespace omw {

namespace {

Eigen::MatrixXd v_five_point(const CouplingSchedule& sched, double t, double h,
                             const Eigen::MatrixXd& u0, const CompletionFrame& frame)
{
    const double T = sched.duration();
    if (t - 2.0 * h < 0.0 || t + 2.0 * h > T)
        throw Error("v_matrix: stencil leaves [0, T]");
    auto u = [&](double s) { return u_matrix_in_frame(sched.sample(s), frame); };
    const Eigen::MatrixXd du =
        (u(t - 2.0 * h) - 8.0 * u(t - h) + 8.0 * u(t + h) - u(t + 2.0 * h)) / (12.0 * h);
    return du.transpose() * u0;
}

} // namespace

VEstimate v_matrix(const CouplingSchedule& sched, double t, double h)
{
    const double T = sched.duration();
    if (h <= 0.0)
        h = T * 1e-5;
    CompletionFrame frame;
    Eigen::MatrixXd u0;
    try {
        u0 = u_matrix(sched.sample(t), &frame);
    } catch (const Error& e) {
        throw Error(std::string("v_matrix: singular basis at t = ") + std::to_string(t) + ": " + e.what());
    }

    VEstimate est;
    est.V = v_five_point(sched, t, h, u0, frame);
    const bool wide = t - 4.0 * h >= 0.0 && t + 4.0 * h <= T;
    const Eigen::MatrixXd other = v_five_point(sched, t, wide ? 2.0 * h : 0.5 * h, u0, frame);
    est.richardson_gap = (est.V - other).cwiseAbs().maxCoeff();
    est.converged = est.richardson_gap <= 1e-6;
    return est;
}

Eigen::MatrixXd v_matrix_in_frame(const CouplingSchedule& sched, double t, double h,
                                  const CompletionFrame& frame)
{
    const double T = sched.duration();
    if (h <= 0.0)
        h = T * 1e-5;
    if (4.0 * h > T)
        throw Error("v_matrix: step too large for the schedule duration");
    auto u = [&](double s) { return u_matrix_in_frame(sched.sample(s), frame); };
    const Eigen::MatrixXd u0 = u(t);
    Eigen::MatrixXd du;
    if (t - 2.0 * h >= 0.0 && t + 2.0 * h <= T) {
        du = (u(t - 2.0 * h) - 8.0 * u(t - h) + 8.0 * u(t + h) - u(t + 2.0 * h)) / (12.0 * h);
    } else {
        const double d = t - 2.0 * h < 0.0 ? h : -h;
        du = (-25.0 * u0 + 48.0 * u(t + d) - 36.0 * u(t + 2.0 * d) + 16.0 * u(t + 3.0 * d)
              - 3.0 * u(t + 4.0 * d))
            / (12.0 * d);
    }
    return du.transpose() * u0;
}

Eigen::VectorXd adiabaticity_ratio(const CouplingSchedule& sched, double t, double h)
{
    const double T = sched.duration();
    if (h <= 0.0)
        h = T * 1e-5;
    const double lo = std::max(0.0, t - h), hi = std::min(T, t + h);
    const Eigen::VectorXd dg = (sched.sample(hi) - sched.sample(lo)) / (hi - lo);
    const Eigen::VectorXd g = sched.sample(t);
    const Eigen::Index n = g.size() - 1;
    Eigen::VectorXd ratio(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double gi = g(i + 1);
        ratio(i) = gi == 0.0 ? std::numeric_limits<double>::infinity()
                             : std::abs(dg(i + 1)) / (gi * gi);
    }
    return ratio;
}

} // namespace omw
