#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace omw {

struct NelderMeadOptions {
    double initial_step = 0.5;
    int max_evaluations = 2000;
    double lower = -1e300; ///< box bounds applied to every coordinate
    double upper = 1e300;
    double f_tolerance = 1e-14;
    double x_tolerance = 1e-9;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evaluations = 0;
    std::vector<double> history; ///< best value after each iteration
    bool budget_exhausted = false;
};

/// Box-constrained Nelder-Mead with dimension-adaptive coefficients. Trial
/// points are projected onto the box. When the simplex collapses before the
/// budget is spent it is rebuilt around the best vertex with half the step.
template <typename Objective>
NelderMeadResult nelder_mead(Objective&& f, Eigen::VectorXd x0, const NelderMeadOptions& opt)
{
    const Eigen::Index d = x0.size();
    const double dd = double(d);
    const double alpha = 1.0, beta = 1.0 + 2.0 / dd, gamma = 0.75 - 0.5 / dd, delta = 1.0 - 1.0 / dd;

    NelderMeadResult res;
    auto clamp = [&](Eigen::VectorXd x) {
        return Eigen::VectorXd(x.cwiseMax(opt.lower).cwiseMin(opt.upper));
    };
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        return f(x);
    };

    std::vector<Eigen::VectorXd> pts(std::size_t(d + 1));
    std::vector<double> vals(std::size_t(d + 1));
    std::vector<std::size_t> order(std::size_t(d + 1));

    auto build = [&](const Eigen::VectorXd& centre, double step) {
        pts[0] = clamp(centre);
        vals[0] = eval(pts[0]);
        for (Eigen::Index i = 0; i < d; ++i) {
            Eigen::VectorXd x = pts[0];
            x(i) += (x(i) + step <= opt.upper) ? step : -step;
            pts[std::size_t(i + 1)] = clamp(x);
            vals[std::size_t(i + 1)] = eval(pts[std::size_t(i + 1)]);
        }
    };

    double step = opt.initial_step;
    build(x0, step);

    while (res.evaluations < opt.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t(0));
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        res.history.push_back(res.history.empty() ? vals[best] : std::min(res.history.back(), vals[best]));

        double diameter = 0.0;
        for (const auto& p : pts)
            diameter = std::max(diameter, (p - pts[best]).cwiseAbs().maxCoeff());
        if (vals[worst] - vals[best] <= opt.f_tolerance * (std::abs(vals[best]) + 1e-300)
            || diameter <= opt.x_tolerance) {
            step *= 0.5;
            if (step < opt.x_tolerance)
                break;
            const Eigen::VectorXd centre = pts[best];
            build(centre, step);
            continue;
        }

        Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i + 1 < order.size(); ++i)
            c += pts[order[i]];
        c /= dd;

        const Eigen::VectorXd xr = clamp(c + alpha * (c - pts[worst]));
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Eigen::VectorXd xe = clamp(c + beta * (xr - c));
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd xc = outside ? clamp(c + gamma * (xr - c)) : clamp(c + gamma * (pts[worst] - c));
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i == best)
                continue;
            pts[i] = clamp(pts[best] + delta * (pts[i] - pts[best]));
            vals[i] = eval(pts[i]);
        }
    }

    const auto it = std::min_element(vals.begin(), vals.end());
    res.x = pts[std::size_t(it - vals.begin())];
    res.f = *it;
    if (res.history.empty() || res.f < res.history.back())
        res.history.push_back(res.f);
    res.budget_exhausted = res.evaluations >= opt.max_evaluations;
    return res;
}

} // namespace omw
