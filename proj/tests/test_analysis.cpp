#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "omw/analysis.hpp"
#include "omw/random.hpp"

using namespace omw;

namespace {

CouplingSchedule random_crab(int n, double T, std::uint64_t seed)
{
    Rng rng(seed);
    CrabParams c;
    c.m = 6;
    c.amplitudes.resize(c.m, n);
    for (int k = 0; k < c.m; ++k)
        for (int i = 0; i < n; ++i)
            c.amplitudes(k, i) = 3.0 * (2.0 * rng.uniform() - 1.0);
    c.r.resize(c.m);
    for (int k = 0; k < c.m; ++k)
        c.r(k) = rng.uniform();
    return CouplingSchedule::crab(T, c);
}

} // namespace

TEST_CASE("W state construction")
{
    CHECK_THROWS_AS(WState(Eigen::Vector2cd(1.0, 1.0)), Error);
    CHECK_THROWS_AS(WState(Eigen::VectorXcd()), Error);
    const auto ws = random_w_states(4, 10, 3);
    for (const auto& w : ws)
        CHECK(w.w.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(random_w_states(4, 10, 3)[7].w == ws[7].w);
    CHECK(random_w_states(4, 10, 4)[7].w != ws[7].w);
    CHECK(canonical_w_states(3)[2].embed() == basis_state(3, 3));
}

TEST_CASE("overlap fidelity")
{
    const ExcitationState a = basis_state(2, 1);
    ExcitationState b = ExcitationState::Zero(4);
    b(1) = Complex(0.0, 0.6);
    b(2) = 0.8;
    CHECK(overlap_fidelity(a, b) == doctest::Approx(0.36));
    CHECK_THROWS_AS(overlap_fidelity(a, ExcitationState::Zero(3)), Error);
}

TEST_CASE("residuals of superpositions are bounded by the basis Gram matrix")
{
    const SystemParams p = SystemParams::uniform(3, 10.0, 1e-3, 1e-2);
    const CouplingSchedule sched = random_crab(3, 25.0, 11);
    const TimeGrid grid = TimeGrid::for_params(p, 25.0);
    Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(5, 3);
    for (int i = 0; i < 3; ++i)
        basis(i + 1, i) = 1.0;
    const Eigen::MatrixXcd fin = propagate_final(p, sched.sample_half_grid(grid.N), basis, grid);
    const Eigen::MatrixXcd G = fin.adjoint() * fin;
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(G).eigenvalues().maxCoeff();
    for (const auto& w : random_w_states(3, 20, 99)) {
        const double res = evolve_emission(p, sched, w.embed(), grid).residual();
        CHECK(res <= lmax * (1.0 + 1e-12));
        CHECK(res == doctest::Approx(w.w.dot(G * w.w).real()).epsilon(1e-10));
    }
}

TEST_CASE("generation regenerates complex W states")
{
    // A lossless, long single-cavity schedule transfers almost perfectly; a
    // complex phase must survive the emit / time-reverse / inject cycle.
    const SystemParams p = SystemParams::uniform(2, 10.0, 0.0, 0.0);
    CrabConfig cfg;
    cfg.T = 40.0;
    cfg.restarts = 1;
    cfg.max_evaluations = 600;
    cfg.grid_N = 8192;
    const OptimizationReport rep = optimize_crab(p, cfg);
    const TimeGrid grid = TimeGrid::make(cfg.T, cfg.grid_N);
    Eigen::Vector2cd w(Complex(0.6, 0.0), Complex(0.0, 0.8));
    const GenerationRun run = generate_w_state(p, rep.schedule, WState(w), grid);
    // Lossless: generation fidelity equals the emitted photon content.
    CHECK(run.fidelity == doctest::Approx(run.transmission).epsilon(1e-6));
    CHECK(run.fidelity > 1.0 - 2.0 * rep.objective);
    CHECK(run.incident.photon_content() == doctest::Approx(1.0).epsilon(1e-12));
    // The injected state is proportional to w, not conj(w).
    const Eigen::VectorXcd got = run.injection.final_state().segment(1, 2);
    CHECK(std::abs(w.dot(got)) > std::abs(w.conjugate().dot(got)));
}

TEST_CASE("damping sweep at zero equals the lossless generation fidelity")
{
    const SystemParams p = SystemParams::uniform(2, 10.0, 1e-5, 1e-3);
    const CouplingSchedule sched = random_crab(2, 30.0, 12);
    const SweepResult r = sweep_damping(p, sched, DampingAxis::gamma_m, {0.0, 1e-2}, 2);
    const double lossless = generation_fidelity(SystemParams::uniform(2, 10.0, 0.0, 0.0), sched);
    CHECK(r.fidelities[0] == doctest::Approx(lossless).epsilon(1e-14));
    CHECK(r.fidelities[1] < r.fidelities[0]);
    CHECK(r.axis == "gamma_m");
    CHECK_THROWS_AS(sweep_damping(p, sched, DampingAxis::kappa_i, {1e-2, 0.0}), Error);
}

TEST_CASE("sweep jobs do not change results")
{
    const SystemParams p = SystemParams::uniform(2, 10.0, 0.0, 0.0);
    const CouplingSchedule sched = random_crab(2, 20.0, 13);
    const std::vector<double> v{0.0, 1e-3, 1e-2};
    CHECK(sweep_damping(p, sched, DampingAxis::kappa_i, v, 1).fidelities
          == sweep_damping(p, sched, DampingAxis::kappa_i, v, 3).fidelities);
}

TEST_CASE("crossing value interpolates")
{
    SweepResult c{"g0T", {10.0, 20.0, 30.0}, {0.9, 0.98, 0.995}, "trivial", 1};
    CHECK(*crossing_value(c, 0.99) == doctest::Approx(20.0 + 10.0 * (0.01 / 0.015)));
    CHECK(*crossing_value(c, 0.5) == 10.0);
    CHECK(!crossing_value(c, 0.999));
}

TEST_CASE("emission through the mechanics costs at least kappa0 / (4 g0^2) phonon time per photon")
{
    // a0 is driven only by g0 b, so E = kappa0 int|a0|^2 <= 2 g0 int|a0 b|, and
    // Cauchy-Schwarz gives int|b|^2 >= kappa0 E / (4 g0^2) for any schedule.
    const SystemParams p = SystemParams::uniform(2, 10.0, 1e-3, 1e-2);
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const CouplingSchedule sched = random_crab(2, 40.0, seed);
        const TimeGrid grid = TimeGrid::for_params(p, 40.0);
        const Trajectory tr = evolve_emission(p, sched, random_w_states(2, 1, seed)[0].embed(), grid);
        double phonons = 0.0;
        for (int k = 0; k < grid.N; ++k)
            phonons += 0.5 * grid.dt() * (std::norm(tr.states(3, k)) + std::norm(tr.states(3, k + 1)));
        const double emitted = tr.ledger.flux_out(grid.N);
        CHECK(emitted > 0.1);
        CHECK(phonons >= 0.99 * p.kappa0 * emitted / 4.0);
    }
}
