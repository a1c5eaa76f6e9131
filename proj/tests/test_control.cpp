#include <doctest.h>

#include "omw/analysis.hpp"
#include "omw/control.hpp"
#include "omw/nelder_mead.hpp"

using namespace omw;

TEST_CASE("nelder-mead minimizes the Rosenbrock function")
{
    auto rosen = [](const Eigen::VectorXd& x) {
        return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
    };
    NelderMeadOptions opt;
    opt.max_evaluations = 4000;
    const NelderMeadResult r = nelder_mead(rosen, Eigen::Vector2d(-1.2, 1.0), opt);
    CHECK(r.f < 1e-10);
    CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-4);
    CHECK(std::is_sorted(r.history.rbegin(), r.history.rend()));
}

TEST_CASE("nelder-mead respects the box")
{
    auto f = [](const Eigen::VectorXd& x) { return (x.array() - 3.0).square().sum(); };
    NelderMeadOptions opt;
    opt.lower = -1.0;
    opt.upper = 1.0;
    const NelderMeadResult r = nelder_mead(f, Eigen::Vector3d(0.0, 0.5, -0.5), opt);
    CHECK(r.x.maxCoeff() <= 1.0);
    CHECK(r.x.minCoeff() >= -1.0);
    CHECK(r.f == doctest::Approx(12.0).epsilon(1e-6));
}

TEST_CASE("nelder-mead reports an exhausted budget")
{
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    NelderMeadOptions opt;
    opt.max_evaluations = 20;
    const NelderMeadResult r = nelder_mead(f, Eigen::VectorXd::Constant(6, 1.0), opt);
    CHECK(r.budget_exhausted);
    CHECK(r.evaluations <= 21);
}

TEST_CASE("CRAB schedule construction")
{
    CrabConfig cfg;
    cfg.m = 2;
    cfg.T = 10.0;
    Eigen::MatrixXd A(2, 1);
    A << 4.0, -5.0;
    CHECK_NOTHROW(crab_schedule(cfg, A, Eigen::Vector2d(0.1, 0.2)));
    A(0, 0) = 5.5;
    CHECK_THROWS_AS(crab_schedule(cfg, A, Eigen::Vector2d(0.1, 0.2)), Error);
    cfg.m = 0;
    CHECK_THROWS_AS(cfg.validate(1), Error);
}

TEST_CASE("zero amplitudes leave the microwave cavities untouched")
{
    const SystemParams p = SystemParams::uniform(2, 10.0, 0.0, 0.0);
    CrabConfig cfg;
    cfg.T = 20.0;
    const CouplingSchedule s = crab_schedule(cfg, Eigen::MatrixXd::Zero(6, 2), Eigen::VectorXd::Constant(6, 0.5));
    const Eigen::VectorXd res = basis_residuals(p, s, TimeGrid::for_params(p, 20.0));
    CHECK(res(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimization is seeded and deterministic")
{
    const SystemParams p = SystemParams::uniform(2, 10.0, 1e-5, 1e-3);
    CrabConfig cfg;
    cfg.m = 3;
    cfg.T = 30.0;
    cfg.restarts = 2;
    cfg.max_evaluations = 60;
    cfg.grid_N = 4096;
    cfg.seed = 5;
    const OptimizationReport a = optimize_crab(p, cfg);
    const OptimizationReport b = optimize_crab(p, cfg);
    CHECK(a.schedule == b.schedule);
    CHECK(a.objective_history == b.objective_history);
    CHECK(a.objective <= a.objective_at_zero);
    CHECK(a.objective == doctest::Approx(a.per_basis_residuals.sum()));
    CHECK(std::is_sorted(a.objective_history.rbegin(), a.objective_history.rend()));
    CHECK(a.schedule.crab_params().seed == 5);
    CHECK(a.budget_exhausted);

    cfg.seed = 6;
    const OptimizationReport c = optimize_crab(p, cfg);
    CHECK(c.schedule.crab_params().r != a.schedule.crab_params().r);
}

TEST_CASE("single-cavity optimization empties the cavity")
{
    const SystemParams p = SystemParams::uniform(1, 10.0, 0.0, 0.0);
    CrabConfig cfg;
    cfg.T = 30.0;
    cfg.restarts = 1;
    cfg.max_evaluations = 400;
    const OptimizationReport r = optimize_crab(p, cfg);
    CHECK(r.objective < 1e-2);
}

TEST_CASE("trivial schedule empties one cavity per stage")
{
    const int n = 3;
    const double T = 90.0;
    const SystemParams p = SystemParams::uniform(n, 10.0, 0.0, 0.0);
    const CouplingSchedule s = trivial_schedule(p, T);
    const TimeGrid grid = TimeGrid::for_params(p, T);
    const int per_stage = grid.N / n;
    for (int i = 1; i <= n; ++i) {
        const Trajectory tr = evolve_emission(p, s, basis_state(n, i), grid);
        // Flux emitted inside stage i.
        const double inside = tr.ledger.flux_out((i)*per_stage) - tr.ledger.flux_out((i - 1) * per_stage);
        const double total = tr.ledger.flux_out(grid.N);
        CHECK(total > 0.9);
        CHECK(inside / total >= 0.95);
    }
    // Only g_i is active during stage i.
    const auto g = s.sample(0.2 * T / n + T / n);
    CHECK(g(1) == 0.0);
    CHECK(g(2) != 0.0);
    CHECK(g(3) == 0.0);
    CHECK_THROWS_AS(trivial_schedule(p, T, 1.0), Error);
}
