#include "omw/dynamics.hpp"

#include <cmath>
#include <limits>

namespace omw {

namespace {

/// y = -i H_c(g) x for one column, using the star structure of H_I.
struct Generator {
    int n;
    Eigen::VectorXd half_damp;

    explicit Generator(const SystemParams& p) : n(p.n), half_damp(0.5 * p.damping_diagonal()) {}

    template <typename In, typename Out>
    void apply(const double* g, const In& x, Out&& y) const
    {
        const Complex bm = x(n + 1);
        Complex acc = 0.0;
        for (int j = 0; j <= n; ++j) {
            acc += g[j] * x(j);
            y(j) = Complex(g[j] * bm.imag(), -g[j] * bm.real()) - half_damp(j) * x(j);
        }
        y(n + 1) = Complex(acc.imag(), -acc.real()) - half_damp(n + 1) * bm;
    }
};

void check_inputs(const SystemParams& p, const CouplingSchedule& sched, const TimeGrid& grid)
{
    p.validate();
    if (sched.n() != p.n)
        throw Error("schedule and system disagree on the number of cavities");
    if (std::abs(sched.duration() - grid.T) > 1e-12 * grid.T)
        throw Error("schedule duration does not match the time grid");
}

struct Channels {
    double out, in, loss;
};

/// Shared RK4 driver for emission and injection. `f_half` holds the input
/// amplitude on the half-step grid (empty for free emission).
Trajectory integrate(const SystemParams& p, const Eigen::MatrixXd& g_half, const ExcitationState& psi0,
                     const TimeGrid& grid, const Eigen::VectorXcd& f_half, double input_sign)
{
    const int n = p.n, d = p.dim(), N = grid.N;
    if (psi0.size() != d)
        throw Error("initial state has wrong dimension");
    if (!psi0.allFinite())
        throw Error("initial state is not finite");

    const Generator gen(p);
    const double sk0 = std::sqrt(p.kappa0);
    const bool driven = f_half.size() > 0;
    const double h = grid.dt();

    auto input = [&](int half) { return driven ? f_half(half) : Complex(0.0); };
    auto rhs = [&](int half, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        gen.apply(g_half.col(half).data(), x, y);
        if (driven)
            y(0) += input_sign * sk0 * input(half);
    };
    auto channels = [&](int half, const Eigen::VectorXcd& x) {
        const Complex f = input(half);
        double loss = 0.0;
        for (int j = 1; j <= n; ++j)
            loss += p.kappa(j - 1) * std::norm(x(j));
        loss += p.gamma_m * std::norm(x(n + 1));
        return Channels{std::norm(sk0 * x(0) - f), std::norm(f), loss};
    };

    Trajectory tr;
    tr.grid = grid;
    tr.states.resize(d, N + 1);
    tr.emitted.grid = grid;
    tr.emitted.samples.resize(N + 1);
    NormLedger& L = tr.ledger;
    L.norm2.resize(N + 1);
    L.flux_out.resize(N + 1);
    L.flux_in.resize(N + 1);
    L.loss.resize(N + 1);

    Eigen::VectorXcd psi = psi0, k1(d), k2(d), k3(d), k4(d), tmp(d);
    double out = 0.0, in = 0.0, loss = 0.0;
    auto record = [&](int k) {
        tr.states.col(k) = psi;
        tr.emitted.samples(k) = sk0 * psi(0) - input(2 * k);
        L.norm2(k) = psi.squaredNorm();
        L.flux_out(k) = out;
        L.flux_in(k) = in;
        L.loss(k) = loss;
    };
    record(0);

    for (int k = 0; k < N; ++k) {
        const int a = 2 * k, m = a + 1, b = a + 2;
        rhs(a, psi, k1);
        const Channels c1 = channels(a, psi);
        tmp = psi + (0.5 * h) * k1;
        rhs(m, tmp, k2);
        const Channels c2 = channels(m, tmp);
        tmp = psi + (0.5 * h) * k2;
        rhs(m, tmp, k3);
        const Channels c3 = channels(m, tmp);
        tmp = psi + h * k3;
        rhs(b, tmp, k4);
        const Channels c4 = channels(b, tmp);

        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out += (h / 6.0) * (c1.out + 2.0 * c2.out + 2.0 * c3.out + c4.out);
        in += (h / 6.0) * (c1.in + 2.0 * c2.in + 2.0 * c3.in + c4.in);
        loss += (h / 6.0) * (c1.loss + 2.0 * c2.loss + 2.0 * c3.loss + c4.loss);
        if (!psi.allFinite())
            throw IntegrationError("state became non-finite", grid.t(k + 1));
        record(k + 1);
    }
    return tr;
}

Eigen::VectorXcd half_grid_input(const PulseShape& f)
{
    const int N = f.grid.N;
    Eigen::VectorXcd out(2 * N + 1);
    for (int k = 0; k <= N; ++k)
        out(2 * k) = f.samples(k);
    for (int k = 0; k < N; ++k)
        out(2 * k + 1) = 0.5 * (f.samples(k) + f.samples(k + 1));
    return out;
}

/// Keeps one completion branch while its pivot stays well conditioned.
struct FrameTracker {
    CompletionFrame frame;
    bool active = false;

    /// Returns true if the branch had to be re-chosen at g.
    bool update(const CouplingVector<>& g)
    {
        const Eigen::VectorXd phi0 = phi0_vector(g);
        if (active && std::abs(phi0(frame.pivot)) >= 0.5 * phi0.cwiseAbs().maxCoeff())
            return false;
        u_matrix(g, &frame);
        const bool switched = active;
        active = true;
        return switched;
    }
};

bool phi0_defined(const CouplingVector<>& g)
{
    return g.squaredNorm() > 0.0 && output_weight(g) > 1e-10;
}

} // namespace

TimeGrid TimeGrid::make(double T, int N)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw Error("TimeGrid: T must be > 0");
    if (N < min_nodes)
        throw Error("TimeGrid: N must be >= 512");
    return TimeGrid{T, N};
}

TimeGrid TimeGrid::for_params(const SystemParams& p, double T)
{
    const double want = std::ceil(40.0 * p.kappa0 * T);
    const int N = want > 4096.0 ? int(std::min(want, 1e8)) : 4096;
    return make(T, N);
}

PulseShape PulseShape::zero(const TimeGrid& grid)
{
    return PulseShape{grid, Eigen::VectorXcd::Zero(grid.N + 1)};
}

double PulseShape::photon_content() const
{
    const int N = grid.N;
    double acc = 0.5 * (std::norm(samples(0)) + std::norm(samples(N)));
    for (int k = 1; k < N; ++k)
        acc += std::norm(samples(k));
    return acc * grid.dt();
}

PulseShape PulseShape::normalized() const
{
    const double c = photon_content();
    PulseShape out = *this;
    if (c > 0.0)
        out.samples /= std::sqrt(c);
    return out;
}

Complex PulseShape::at(double t) const
{
    const double x = std::clamp(t / grid.dt(), 0.0, double(grid.N));
    const int k = std::min(int(x), grid.N - 1);
    const double w = x - k;
    return (1.0 - w) * samples(k) + w * samples(k + 1);
}

double NormLedger::max_imbalance() const
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < norm2.size(); ++k)
        worst = std::max(worst, std::abs(imbalance(int(k))));
    return worst;
}

Trajectory evolve_emission(const SystemParams& p, const CouplingSchedule& sched,
                           const ExcitationState& psi0, const TimeGrid& grid,
                           const IntegratorOptions& opts)
{
    check_inputs(p, sched, grid);
    return integrate(p, sched.sample_half_grid(grid.N), psi0, grid, Eigen::VectorXcd(),
                     opts.input_sign);
}

Trajectory evolve_injection(const SystemParams& p, const CouplingSchedule& sched,
                            const PulseShape& f_in, const ExcitationState& psi0,
                            const TimeGrid& grid, const IntegratorOptions& opts)
{
    check_inputs(p, sched, grid);
    if (f_in.grid.N != grid.N || std::abs(f_in.grid.T - grid.T) > 1e-12 * grid.T
        || f_in.samples.size() != grid.N + 1)
        throw Error("input pulse grid does not match the integration grid");
    Trajectory tr = integrate(p, sched.sample_half_grid(grid.N), psi0, grid, half_grid_input(f_in),
                              opts.input_sign);
    tr.absorbed = f_in;
    return tr;
}

Eigen::MatrixXcd propagate_final(const SystemParams& p, const Eigen::MatrixXd& couplings,
                                 const Eigen::MatrixXcd& psi0, const TimeGrid& grid)
{
    const int d = p.dim(), N = grid.N;
    if (psi0.rows() != d || couplings.rows() != p.n + 1 || couplings.cols() != 2 * N + 1)
        throw Error("propagate_final: dimension mismatch");
    const Generator gen(p);
    const double h = grid.dt();
    const Eigen::Index cols = psi0.cols();

    Eigen::MatrixXcd psi = psi0, k1(d, cols), k2(d, cols), k3(d, cols), k4(d, cols), tmp(d, cols);
    auto rhs = [&](int half, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y) {
        const double* g = couplings.col(half).data();
        for (Eigen::Index c = 0; c < cols; ++c)
            gen.apply(g, x.col(c), y.col(c));
    };
    for (int k = 0; k < N; ++k) {
        const int a = 2 * k;
        rhs(a, psi, k1);
        tmp = psi + (0.5 * h) * k1;
        rhs(a + 1, tmp, k2);
        tmp = psi + (0.5 * h) * k2;
        rhs(a + 1, tmp, k3);
        tmp = psi + h * k3;
        rhs(a + 2, tmp, k4);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!psi.allFinite())
        throw IntegrationError("state became non-finite", grid.T);
    return psi;
}

Eigen::VectorXcd dark_projection(const CouplingVector<>& g, const ExcitationState& psi)
{
    if (psi.size() != g.size() + 1)
        throw Error("dark_projection: dimension mismatch");
    return dark_basis(g).dark.transpose().cast<Complex>() * psi;
}

ReducedState ReducedTrajectory::at(int k) const
{
    ReducedState s{C.col(k), std::nullopt};
    if (alpha_valid[std::size_t(k)])
        s.alpha = alpha.col(k);
    return s;
}

ReducedTrajectory evolve_reduced(const SystemParams& p, const CouplingSchedule& sched,
                                 const ReducedState& C0, const TimeGrid& grid)
{
    check_inputs(p, sched, grid);
    const int n = p.n, N = grid.N;
    if (C0.C.size() != n)
        throw Error("evolve_reduced: C0 has wrong dimension");

    const Eigen::MatrixXd g_half = sched.sample_half_grid(N);
    Eigen::MatrixXd v_half(n, 2 * N + 1);
    for (int j = 0; j <= 2 * N; ++j) {
        try {
            v_half.col(j) = dark_basis(Eigen::VectorXd(g_half.col(j))).optical_overlap();
        } catch (const Error&) {
            throw IntegrationError("dark basis singular", j * grid.T / (2.0 * N));
        }
    }

    ReducedTrajectory rt;
    rt.grid = grid;
    rt.C.resize(n, N + 1);
    rt.alpha = Eigen::MatrixXcd::Zero(n, N + 1);
    rt.alpha_valid.assign(std::size_t(N + 1), false);

    const double h = grid.dt(), rate = 0.5 * p.kappa0;
    auto rhs = [&](int half, const Eigen::VectorXcd& c) -> Eigen::VectorXcd {
        const Eigen::VectorXd v = v_half.col(half);
        return -rate * v.cast<Complex>() * v.cast<Complex>().dot(c);
    };

    FrameTracker tracker;
    auto record = [&](int k, const Eigen::VectorXcd& c) {
        rt.C.col(k) = c;
        const Eigen::VectorXd g = g_half.col(2 * k);
        if (phi0_defined(g)) {
            tracker.update(g);
            rt.alpha.col(k) = u_matrix_in_frame(g, tracker.frame).transpose().cast<Complex>() * c;
            rt.alpha_valid[std::size_t(k)] = true;
        }
    };

    Eigen::VectorXcd c = C0.C;
    record(0, c);
    for (int k = 0; k < N; ++k) {
        const int a = 2 * k;
        const Eigen::VectorXcd k1 = rhs(a, c);
        const Eigen::VectorXcd k2 = rhs(a + 1, c + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = rhs(a + 1, c + 0.5 * h * k2);
        const Eigen::VectorXcd k4 = rhs(a + 2, c + h * k3);
        c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!c.allFinite())
            throw IntegrationError("reduced state became non-finite", grid.t(k + 1));
        record(k + 1, c);
    }
    return rt;
}

ReducedTrajectory evolve_adiabatic_frame(const SystemParams& p, const CouplingSchedule& sched,
                                         const Eigen::VectorXcd& alpha0, const TimeGrid& grid)
{
    check_inputs(p, sched, grid);
    const int n = p.n, N = grid.N;
    if (alpha0.size() != n)
        throw Error("evolve_adiabatic_frame: alpha0 has wrong dimension");

    int k0 = 0;
    while (k0 <= N && !phi0_defined(sched.sample(grid.t(k0))))
        ++k0;
    if (k0 >= N)
        throw Error("evolve_adiabatic_frame: phi0 undefined on the whole grid");

    ReducedTrajectory rt;
    rt.grid = grid;
    rt.first_node = k0;
    rt.C = Eigen::MatrixXcd::Zero(n, N + 1);
    rt.alpha = Eigen::MatrixXcd::Zero(n, N + 1);
    rt.alpha_valid.assign(std::size_t(N + 1), false);

    const double h = grid.dt(), fd_step = grid.T * 1e-5, rate = 0.5 * p.kappa0;
    FrameTracker tracker;
    tracker.update(sched.sample(grid.t(k0)));

    auto rhs = [&](double t, const Eigen::VectorXcd& a) -> Eigen::VectorXcd {
        const Eigen::VectorXd g = sched.sample(t);
        Eigen::VectorXcd da = v_matrix_in_frame(sched, t, fd_step, tracker.frame).cast<Complex>() * a;
        da(0) -= rate * output_weight(g) * a(0);
        return da;
    };
    auto record = [&](int k, const Eigen::VectorXcd& a) {
        const Eigen::VectorXd g = sched.sample(grid.t(k));
        rt.alpha.col(k) = a;
        rt.C.col(k) = u_matrix_in_frame(g, tracker.frame).cast<Complex>() * a;
        rt.alpha_valid[std::size_t(k)] = true;
    };

    Eigen::VectorXcd a = alpha0;
    record(k0, a);
    for (int k = k0; k < N; ++k) {
        const double t = grid.t(k);
        const Eigen::VectorXcd k1 = rhs(t, a);
        const Eigen::VectorXcd k2 = rhs(t + 0.5 * h, a + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = rhs(t + 0.5 * h, a + 0.5 * h * k2);
        const Eigen::VectorXcd k4 = rhs(t + h, a + h * k3);
        a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!a.allFinite())
            throw IntegrationError("rotated-frame state became non-finite", grid.t(k + 1));

        const Eigen::VectorXd g_next = sched.sample(grid.t(k + 1));
        const CompletionFrame old = tracker.frame;
        if (tracker.update(g_next)) {
            // Re-express alpha in the new branch: alpha' = U_new^T U_old alpha.
            a = (u_matrix_in_frame(g_next, tracker.frame).transpose() * u_matrix_in_frame(g_next, old))
                    .cast<Complex>()
                * a;
        }
        record(k + 1, a);
    }
    return rt;
}

ReducedState analytic_time_independent(const CouplingVector<>& g, double kappa0,
                                       const ReducedState& C0, double t)
{
    const Eigen::VectorXd phi0 = phi0_vector(g);
    if (C0.C.size() != phi0.size())
        throw Error("analytic_time_independent: C0 has wrong dimension");
    const double lam = output_weight(g);
    const double exponent = kappa0 * lam;
    double factor = 1.0;
    if (exponent > 0.0)
        factor = std::isinf(t) ? 0.0 : std::exp(-0.5 * exponent * t);
    const Eigen::VectorXcd phi = phi0.cast<Complex>();
    ReducedState out;
    out.C = C0.C + (factor - 1.0) * phi * phi.dot(C0.C);
    out.alpha = u_matrix(g).transpose().cast<Complex>() * out.C;
    return out;
}

PulseShape time_reverse(const PulseShape& pulse)
{
    PulseShape out = pulse;
    out.samples = pulse.samples.reverse().conjugate();
    return out;
}

CouplingSchedule time_reverse(const CouplingSchedule& sched)
{
    return sched.time_reversed();
}

} // namespace omw
