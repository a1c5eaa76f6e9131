#include "omw/control.hpp"

#include <cmath>
#include <numbers>

#include "omw/nelder_mead.hpp"
#include "omw/random.hpp"

namespace omw {

namespace {

/// sin(2 pi k (1 + r_k) t / T) on the half-step grid, m x (2N+1).
Eigen::MatrixXd crab_basis_table(const Eigen::VectorXd& r, int N)
{
    const int m = int(r.size());
    Eigen::MatrixXd B(m, 2 * N + 1);
    for (int j = 0; j <= 2 * N; ++j) {
        const double x = j == 2 * N ? 1.0 : double(j) / (2.0 * N);
        for (int k = 0; k < m; ++k)
            B(k, j) = std::sin(2.0 * std::numbers::pi * double(k + 1) * (1.0 + r(k)) * x);
    }
    return B;
}

Eigen::MatrixXcd canonical_states(int n)
{
    Eigen::MatrixXcd psi0 = Eigen::MatrixXcd::Zero(n + 2, n);
    for (int i = 0; i < n; ++i)
        psi0(i + 1, i) = 1.0;
    return psi0;
}

Eigen::VectorXd column_norms2(const Eigen::MatrixXcd& psi)
{
    return psi.colwise().squaredNorm().transpose();
}

} // namespace

void CrabConfig::validate(int n) const
{
    if (m < 1)
        throw Error("CrabConfig: m must be >= 1");
    if (!(T > 0.0) || !(amplitude_bound > 0.0) || !(initial_step > 0.0))
        throw Error("CrabConfig: T, amplitude_bound and initial_step must be > 0");
    if (restarts < 1 || max_evaluations < 1)
        throw Error("CrabConfig: restarts and max_evaluations must be >= 1");
    if (warm_amplitudes && (warm_amplitudes->rows() != m || warm_amplitudes->cols() != n))
        throw Error("CrabConfig: warm-start amplitudes must be m x n");
    if (warm_r && warm_r->size() != m)
        throw Error("CrabConfig: warm-start r must have m entries");
}

CouplingSchedule crab_schedule(const CrabConfig& cfg, const Eigen::MatrixXd& A, const Eigen::VectorXd& r)
{
    if (A.rows() != cfg.m)
        throw Error("crab_schedule: amplitude matrix must have m rows");
    if (A.size() && A.cwiseAbs().maxCoeff() > cfg.amplitude_bound)
        throw Error("crab_schedule: amplitude exceeds bound");
    CrabParams params;
    params.m = cfg.m;
    params.amplitudes = A;
    params.r = r;
    params.g0_fixed = cfg.g0_fixed;
    params.seed = cfg.seed;
    return CouplingSchedule::crab(cfg.T, std::move(params));
}

Eigen::VectorXd basis_residuals(const SystemParams& p, const CouplingSchedule& sched, const TimeGrid& grid)
{
    if (sched.n() != p.n)
        throw Error("basis_residuals: schedule and system disagree on n");
    return column_norms2(propagate_final(p, sched.sample_half_grid(grid.N), canonical_states(p.n), grid));
}

OptimizationReport optimize_crab(const SystemParams& p, const CrabConfig& cfg)
{
    p.validate();
    cfg.validate(p.n);
    const int n = p.n, m = cfg.m;
    const TimeGrid grid = cfg.grid_N > 0 ? TimeGrid::make(cfg.T, cfg.grid_N) : TimeGrid::for_params(p, cfg.T);
    const Eigen::MatrixXcd psi0 = canonical_states(n);

    Eigen::MatrixXd couplings(n + 1, 2 * grid.N + 1);
    couplings.row(0).setConstant(cfg.g0_fixed);
    auto objective = [&](const Eigen::MatrixXd& table, const Eigen::VectorXd& x) {
        const Eigen::Map<const Eigen::MatrixXd> A(x.data(), m, n);
        couplings.bottomRows(n).noalias() = A.transpose() * table / double(m);
        return column_norms2(propagate_final(p, couplings, psi0, grid)).sum();
    };

    OptimizationReport report{crab_schedule(cfg, Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd::Zero(m)),
                              {}, {}, 0.0, 0.0, 0, cfg.seed, 0, false};

    NelderMeadOptions nm;
    nm.initial_step = cfg.initial_step * cfg.g0_fixed;
    nm.max_evaluations = cfg.max_evaluations;
    nm.lower = -cfg.amplitude_bound;
    nm.upper = cfg.amplitude_bound;

    double best = std::numeric_limits<double>::infinity();
    double best_f = best;
    Eigen::MatrixXd best_A;
    Eigen::VectorXd best_r;
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(Rng::derive(cfg.seed, std::uint64_t(restart)));
        Eigen::VectorXd r(m);
        for (int k = 0; k < m; ++k)
            r(k) = rng.uniform();
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m * n);
        if (restart == 0 && cfg.warm_amplitudes) {
            x0 = Eigen::Map<const Eigen::VectorXd>(cfg.warm_amplitudes->data(), m * n)
                     .cwiseMax(-cfg.amplitude_bound)
                     .cwiseMin(cfg.amplitude_bound);
            if (cfg.warm_r)
                r = *cfg.warm_r;
        }

        const Eigen::MatrixXd table = crab_basis_table(r, grid.N);
        if (restart == 0)
            report.objective_at_zero = objective(table, Eigen::VectorXd::Zero(m * n));

        NelderMeadResult res = nelder_mead([&](const Eigen::VectorXd& x) { return objective(table, x); },
                                           x0, nm);
        report.evaluations += res.evaluations;
        report.budget_exhausted = report.budget_exhausted || res.budget_exhausted;
        for (double v : res.history) {
            best = std::min(best, v);
            report.objective_history.push_back(best);
        }
        if (res.f < best_f) {
            best_f = res.f;
            best_A = Eigen::Map<const Eigen::MatrixXd>(res.x.data(), m, n);
            best_r = r;
            report.best_restart = restart;
        }
    }

    report.schedule = crab_schedule(cfg, best_A, best_r);
    report.per_basis_residuals = basis_residuals(p, report.schedule, grid);
    report.objective = report.per_basis_residuals.sum();
    if (report.objective_at_zero < report.objective) {
        // The zero schedule is always admissible.
        report.schedule = crab_schedule(cfg, Eigen::MatrixXd::Zero(m, n), best_r);
        report.per_basis_residuals = basis_residuals(p, report.schedule, grid);
        report.objective = report.per_basis_residuals.sum();
    }
    if (report.objective_history.empty() || report.objective_history.back() > report.objective)
        report.objective_history.push_back(report.objective);
    return report;
}

CouplingSchedule trivial_schedule(const SystemParams& p, double T, double per_stage_margin, double g0)
{
    p.validate();
    if (!(T > 0.0))
        throw Error("trivial_schedule: T must be > 0");
    if (!(per_stage_margin >= 0.0 && per_stage_margin < 1.0))
        throw Error("trivial_schedule: per_stage_margin must lie in [0, 1)");
    const int n = p.n;
    const double stage = T / n;

    SystemParams single = SystemParams::uniform(1, p.kappa0, p.kappa.mean(), p.gamma_m, p.g0_ref);
    const TimeGrid grid = TimeGrid::for_params(single, stage);
    auto residual = [&](double peak) {
        Segment s;
        s.duration = stage;
        s.g = Eigen::Vector2d(g0, peak);
        s.profile.kind = Profile::Kind::sine_bump;
        s.profile.active_fraction = 1.0 - per_stage_margin;
        const auto sched = CouplingSchedule::piecewise({s});
        return basis_residuals(single, sched, grid)(0);
    };

    // Coarse scan, then golden-section refinement around the best point.
    const double hi = 5.0 * g0;
    const int coarse = 24;
    double best_peak = hi / coarse, best_val = residual(best_peak);
    for (int i = 2; i <= coarse; ++i) {
        const double x = hi * i / coarse;
        const double v = residual(x);
        if (v < best_val) {
            best_val = v;
            best_peak = x;
        }
    }
    double a = std::max(1e-6, best_peak - hi / coarse), b = std::min(hi, best_peak + hi / coarse);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = residual(c), fd = residual(d);
    for (int it = 0; it < 30; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = residual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = residual(d);
        }
    }
    const double peak = fc < fd ? c : d;
    if (std::min(fc, fd) < best_val)
        best_peak = peak;

    std::vector<Segment> segments;
    for (int i = 1; i <= n; ++i) {
        Segment s;
        s.duration = stage;
        s.g = Eigen::VectorXd::Zero(n + 1);
        s.g(0) = g0;
        s.g(i) = best_peak;
        s.profile.kind = Profile::Kind::sine_bump;
        s.profile.active_fraction = 1.0 - per_stage_margin;
        segments.push_back(std::move(s));
    }
    return CouplingSchedule::piecewise(std::move(segments));
}

CouplingSchedule trivial_from_reference(const SystemParams& p, double T, const CouplingSchedule& single_cavity)
{
    p.validate();
    if (single_cavity.kind() != CouplingSchedule::Kind::crab || single_cavity.n() != 1
        || single_cavity.reversed())
        throw Error("trivial_from_reference: reference must be a forward single-cavity CRAB schedule");
    const CrabParams& ref = single_cavity.crab_params();
    const int n = p.n;
    std::vector<Segment> segments;
    for (int i = 1; i <= n; ++i) {
        Segment s;
        s.duration = T / n;
        s.g = Eigen::VectorXd::Zero(n + 1);
        s.g(0) = ref.g0_fixed;
        s.g(i) = 1.0;
        s.profile.kind = Profile::Kind::harmonic;
        s.profile.a = ref.amplitudes.col(0);
        s.profile.r = ref.r;
        segments.push_back(std::move(s));
    }
    return CouplingSchedule::piecewise(std::move(segments));
}

} // namespace omw
