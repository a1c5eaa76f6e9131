#include "omw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "omw/analysis.hpp"
#include "omw/control.hpp"
#include "omw/dynamics.hpp"
#include "omw/model.hpp"
#include "omw/random.hpp"

namespace omw {

namespace {

CheckResult make_check(std::string name, double value, double threshold, std::string detail = {})
{
    return {std::move(name), value, threshold, std::isfinite(value) && value < threshold, std::move(detail)};
}

/// Smooth random CRAB schedule with |g_i| <= amplitude.
CouplingSchedule random_crab(int n, double T, double amplitude, Rng& rng)
{
    CrabConfig cfg;
    cfg.T = T;
    Eigen::MatrixXd A(cfg.m, n);
    for (int k = 0; k < cfg.m; ++k)
        for (int i = 0; i < n; ++i)
            A(k, i) = amplitude * (2.0 * rng.uniform() - 1.0);
    Eigen::VectorXd r(cfg.m);
    for (int k = 0; k < cfg.m; ++k)
        r(k) = rng.uniform();
    return crab_schedule(cfg, A, r);
}

/// Fine enough that RK4 norm drift stays well below the ledger tolerance.
TimeGrid fine_grid(const SystemParams& p, double T)
{
    return TimeGrid::make(T, std::max(TimeGrid::for_params(p, T).N, int(std::ceil(160.0 * T))));
}

CheckResult check_spectrum(Rng& rng)
{
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 6;
        Eigen::VectorXd g(n + 1);
        for (int i = 0; i <= n; ++i)
            g(i) = 4.0 * rng.uniform() - 2.0;
        const double s = g.norm();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(interaction_hamiltonian(g));
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(n + 2);
        expected(0) = -s;
        expected(n + 1) = s;
        worst = std::max(worst, (es.eigenvalues() - expected).cwiseAbs().maxCoeff() / s);
    }
    return make_check("spectrum", worst, 1e-10, "max |eig - {0 x n, +-s_n}| / s_n over 100 random g, n = 1..6");
}

CheckResult check_orthonormality(Rng& rng)
{
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 6;
        Eigen::VectorXd g(n + 1);
        for (int i = 0; i <= n; ++i)
            g(i) = 4.0 * rng.uniform() - 2.0;
        const Eigen::MatrixXd B = dark_basis(g).all();
        const Eigen::MatrixXd H = interaction_hamiltonian(g);
        worst = std::max(worst, (B.transpose() * B - Eigen::MatrixXd::Identity(n + 2, n + 2)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (H * B.leftCols(n)).cwiseAbs().maxCoeff() / g.norm());
    }
    return make_check("dark_basis_orthonormal", worst, 1e-12, "max |B^T B - I| and |H_I phi_k| / s_n");
}

CheckResult check_v_antisymmetry(int n, double T, int count, Rng& rng)
{
    double worst = 0.0;
    for (int c = 0; c < count; ++c) {
        const CouplingSchedule sched = random_crab(n, T, 2.0, rng);
        double sym = 0.0, mag = 0.0;
        for (int j = 0; j < 16; ++j) {
            const double t = T * (0.05 + 0.9 * j / 15.0);
            const Eigen::MatrixXd V = v_matrix(sched, t).V;
            sym = std::max(sym, (V + V.transpose()).cwiseAbs().maxCoeff());
            mag = std::max(mag, V.cwiseAbs().maxCoeff());
        }
        worst = std::max(worst, mag > 0.0 ? sym / mag : 0.0);
    }
    return make_check("v_antisymmetry", worst, 1e-8,
                      "max|V+V^T| / max|V| over " + std::to_string(count) + " random CRAB schedules");
}

CheckResult check_frame_drift(int n, double T, Rng& rng)
{
    const SystemParams p = SystemParams::uniform(n, 0.0, 0.0, 0.0);
    const CouplingSchedule sched = random_crab(n, T, 2.0, rng);
    Eigen::VectorXcd a0 = random_w_states(n, 1, rng.next())[0].w;
    const ReducedTrajectory rt = evolve_adiabatic_frame(p, sched, a0, TimeGrid::for_params(p, T));
    double drift = 0.0;
    for (int k = rt.first_node; k <= rt.grid.N; ++k)
        drift = std::max(drift, std::abs(rt.alpha.col(k).norm() - 1.0));
    return make_check("reduced_norm_drift_kappa0_0", drift, 1e-6, "rotated-frame |alpha| drift over g0 T");
}

CheckResult check_lossless(int n, double T, Rng& rng)
{
    const SystemParams p = SystemParams::uniform(n, 0.0, 0.0, 0.0);
    const CouplingSchedule sched = random_crab(n, T, 1.0, rng);
    const auto w = random_w_states(n, 1, rng.next())[0];
    const Trajectory tr = evolve_emission(p, sched, w.embed(), fine_grid(p, T));
    const double drift = (tr.ledger.norm2.array() - 1.0).abs().maxCoeff();
    return make_check("lossless_norm", drift, 1e-6, "max |<psi|psi> - 1| with all dampings zero");
}

std::pair<CheckResult, CheckResult> check_ledgers(const SystemParams& p, const CouplingSchedule& sched,
                                                  double input_sign, Rng& rng)
{
    const TimeGrid grid = fine_grid(p, sched.duration());
    IntegratorOptions opts;
    opts.input_sign = input_sign;
    double emit = 0.0, inject = 0.0;
    for (const auto& w : random_w_states(p.n, 3, rng.next())) {
        const Trajectory e = evolve_emission(p, sched, w.embed(), grid, opts);
        emit = std::max(emit, e.ledger.max_imbalance());
        const PulseShape incident = time_reverse(e.emitted).normalized();
        const Trajectory i = evolve_injection(p, time_reverse(sched), incident, ExcitationState::Zero(p.dim()),
                                              grid, opts);
        inject = std::max(inject, i.ledger.max_imbalance());
    }
    return {make_check("emission_ledger", emit, 1e-6, "norm2 + flux_out + loss - norm2(0)"),
            make_check("injection_ledger", inject, 1e-6, "norm2 + flux_out - flux_in + loss - norm2(0)")};
}

/// Default grid against half the step on the same schedule.
CheckResult check_step_halving(const SystemParams& p, const CouplingSchedule& sched, Rng& rng)
{
    const TimeGrid coarse = TimeGrid::for_params(p, sched.duration());
    const TimeGrid fine = TimeGrid::make(coarse.T, 2 * coarse.N);
    const ExcitationState psi0 = random_w_states(p.n, 1, rng.next())[0].embed();
    const Trajectory a = evolve_emission(p, sched, psi0, coarse);
    const Trajectory b = evolve_emission(p, sched, psi0, fine);
    double diff = 0.0;
    for (int k = 0; k <= coarse.N; ++k)
        diff = std::max(diff, (a.states.col(k) - b.states.col(2 * k)).cwiseAbs().maxCoeff());
    return make_check("step_halving", diff, 1e-8, "sup-norm change of the state when the RK4 step is halved");
}

std::pair<CheckResult, CheckResult> check_analytic(int n, double kappa0, Rng& rng)
{
    const SystemParams p = SystemParams::uniform(n, kappa0, 0.0, 0.0);
    Eigen::VectorXd g0(n + 1);
    g0(0) = 1.0;
    for (int i = 1; i <= n; ++i)
        g0(i) = 0.3 + rng.uniform();
    const double lam = output_weight(g0);
    const double T = 20.0 / (kappa0 * lam);
    Eigen::VectorXd envelope(2);
    envelope << 0.3, -0.2;
    const CouplingSchedule sched = CouplingSchedule::constant_ratio(T, g0, envelope);
    const TimeGrid grid = TimeGrid::for_params(p, T);

    // Generic initial condition: sup-norm agreement along the whole trajectory.
    ReducedState c0{random_w_states(n, 1, rng.next())[0].w, std::nullopt};
    const ReducedTrajectory rt = evolve_reduced(p, sched, c0, grid);
    double diff = 0.0;
    for (int k = 0; k <= grid.N; ++k)
        diff = std::max(diff, (rt.C.col(k) - analytic_time_independent(g0, kappa0, c0, grid.t(k)).C)
                                  .cwiseAbs()
                                  .maxCoeff());

    // C(0) = phi0 empties completely.
    ReducedState bright{phi0_vector(g0).cast<Complex>(), std::nullopt};
    const ReducedTrajectory rb = evolve_reduced(p, sched, bright, grid);
    const double residual = rb.C.col(grid.N).squaredNorm();
    return {make_check("analytic_vs_reduced", diff, 1e-6, "sup-norm over a constant-ratio schedule"),
            make_check("phi0_decay", residual, 1e-8, "||C||^2 at t = 20/(kappa0 Lambda_11)")};
}

} // namespace

bool VerifyReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport run_verification(const VerifyOptions& opts)
{
    opts.system.validate();
    const int n = opts.system.n;
    if (opts.schedule && opts.schedule->n() != n)
        throw Error("verify: schedule has a different number of cavities than the system");
    Rng rng(opts.seed);
    VerifyReport report;
    report.checks.push_back(check_spectrum(rng));
    report.checks.push_back(check_orthonormality(rng));
    report.checks.push_back(check_v_antisymmetry(n, opts.T, opts.random_schedules, rng));
    report.checks.push_back(check_frame_drift(n, opts.T, rng));
    report.checks.push_back(check_lossless(n, opts.T, rng));
    const CouplingSchedule sched = opts.schedule ? *opts.schedule : random_crab(n, opts.T, 1.0, rng);
    auto [emit, inject] = check_ledgers(opts.system, sched, opts.flip_input_sign ? -1.0 : 1.0, rng);
    report.checks.push_back(emit);
    report.checks.push_back(inject);
    report.checks.push_back(check_step_halving(opts.system, sched, rng));
    auto [analytic, decay] = check_analytic(n, opts.system.kappa0 > 0.0 ? opts.system.kappa0 : 10.0, rng);
    report.checks.push_back(analytic);
    report.checks.push_back(decay);
    return report;
}

nlohmann::json verify_report_json(const VerifyReport& report)
{
    nlohmann::json j;
    j["passed"] = report.passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks)
        j["checks"].push_back({{"name", c.name},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"passed", c.passed},
                               {"detail", c.detail}});
    return j;
}

std::string verify_report_text(const VerifyReport& report)
{
    std::string out;
    char buf[256];
    for (const auto& c : report.checks) {
        std::snprintf(buf, sizeof buf, "%-4s %-28s %.3e < %.1e  %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                      c.value, c.threshold, c.detail.c_str());
        out += buf;
    }
    out += report.passed() ? "all checks passed\n" : "verification FAILED\n";
    return out;
}

} // namespace omw
