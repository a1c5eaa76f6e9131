#include "omw/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include "omw/random.hpp"

namespace omw {

namespace {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; results land in index order.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn)
{
    if (jobs <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::future<void>> running;
    for (int i = 0; i < count; ++i) {
        if (int(running.size()) >= jobs) {
            running.front().get();
            running.erase(running.begin());
        }
        running.push_back(std::async(std::launch::async, [&fn, i] { fn(i); }));
    }
    for (auto& f : running)
        f.get();
}

SystemParams with_n(const SystemParams& base, int n)
{
    SystemParams p = base;
    p.n = n;
    p.kappa = Eigen::VectorXd::Constant(n, base.kappa.size() ? base.kappa.mean() : 0.0);
    return p;
}

} // namespace

WState::WState(Eigen::VectorXcd coefficients) : w(std::move(coefficients))
{
    if (w.size() < 1)
        throw Error("WState: need at least one coefficient");
    if (std::abs(w.squaredNorm() - 1.0) > 1e-12)
        throw Error("WState: coefficients must have unit norm");
}

std::vector<WState> canonical_w_states(int n)
{
    std::vector<WState> out;
    for (int i = 0; i < n; ++i)
        out.emplace_back(Eigen::VectorXcd::Unit(n, i));
    return out;
}

std::vector<WState> random_w_states(int n, int count, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<WState> out;
    for (int c = 0; c < count; ++c) {
        Eigen::VectorXcd w(n);
        for (int i = 0; i < n; ++i) {
            const double re = rng.normal();
            const double im = rng.normal();
            w(i) = Complex(re, im);
        }
        w.normalize();
        out.emplace_back(std::move(w));
    }
    return out;
}

double overlap_fidelity(const ExcitationState& target, const ExcitationState& final)
{
    if (target.size() != final.size())
        throw Error("overlap_fidelity: dimension mismatch");
    return std::norm(target.dot(final));
}

GenerationRun generate_w_state(const SystemParams& p, const CouplingSchedule& sched, const WState& target,
                               const TimeGrid& grid)
{
    if (target.n() != p.n)
        throw Error("generate_w_state: target has wrong number of cavities");
    GenerationRun run{0.0, 0.0, evolve_emission(p, sched, embed_w(target.w.conjugate()), grid), {}, {}};
    run.transmission = run.emission.emitted.photon_content();
    run.incident = time_reverse(run.emission.emitted).normalized();
    run.injection = evolve_injection(p, time_reverse(sched), run.incident,
                                     ExcitationState::Zero(p.dim()), grid);
    run.fidelity = overlap_fidelity(target.embed(), run.injection.final_state());
    return run;
}

double generation_fidelity(const SystemParams& p, const CouplingSchedule& sched,
                           const std::vector<WState>& targets, std::optional<TimeGrid> grid)
{
    const std::vector<WState> list = targets.empty() ? canonical_w_states(p.n) : targets;
    const TimeGrid g = grid ? *grid : TimeGrid::for_params(p, sched.duration());
    double acc = 0.0;
    for (const auto& w : list)
        acc += generate_w_state(p, sched, w, g).fidelity;
    return acc / double(list.size());
}

double injection_fidelity(const SystemParams& p, const CouplingSchedule& sched, const PulseShape& incident,
                          const WState& target)
{
    const Trajectory tr = evolve_injection(p, time_reverse(sched), incident, ExcitationState::Zero(p.dim()),
                                           incident.grid);
    return overlap_fidelity(target.embed(), tr.final_state());
}

SweepResult sweep_damping(const SystemParams& base, const CouplingSchedule& sched, DampingAxis axis,
                          const std::vector<double>& values, int jobs)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] < 0.0 || (i && values[i] < values[i - 1]))
            throw Error("sweep_damping: values must be nonnegative and ascending");
    SweepResult res;
    res.axis = axis == DampingAxis::kappa_i ? "kappa_i" : "gamma_m";
    res.values = values;
    res.fidelities.assign(values.size(), 0.0);
    res.method = "fixed";
    res.n = base.n;
    parallel_for(int(values.size()), jobs, [&](int i) {
        SystemParams p = base;
        if (axis == DampingAxis::kappa_i) {
            p.kappa.setConstant(values[std::size_t(i)]);
            p.gamma_m = 0.0;
        } else {
            p.kappa.setZero();
            p.gamma_m = values[std::size_t(i)];
        }
        res.fidelities[std::size_t(i)] = generation_fidelity(p, sched);
    });
    return res;
}

std::vector<SweepResult> sweep_time(const SystemParams& base, const TimeSweepConfig& cfg)
{
    std::vector<double> Ts = cfg.T_values;
    std::sort(Ts.begin(), Ts.end());
    if (Ts.empty() || Ts.front() <= 0.0)
        throw Error("sweep_time: need positive T values");

    // Single-cavity optima, shared by the n = 1 curve and every trivial stage.
    std::vector<double> taus;
    for (double T : Ts) {
        if (cfg.optimized && std::count(cfg.n_list.begin(), cfg.n_list.end(), 1))
            taus.push_back(T);
        if (cfg.trivial)
            for (int n : cfg.n_list)
                taus.push_back(T / n);
    }
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }),
               taus.end());

    const SystemParams single = with_n(base, 1);
    std::map<double, CouplingSchedule> reference;
    auto lookup = [&](double tau) -> const CouplingSchedule& {
        auto it = reference.lower_bound(tau * (1.0 - 1e-12));
        if (it == reference.end())
            throw Error("sweep_time: missing single-cavity reference");
        return it->second;
    };
    {
        std::optional<OptimizationReport> prev;
        for (double tau : taus) {
            CrabConfig c = cfg.crab;
            c.T = tau;
            if (prev) {
                c.warm_amplitudes = prev->schedule.crab_params().amplitudes;
                c.warm_r = prev->schedule.crab_params().r;
            }
            prev = optimize_crab(single, c);
            reference.emplace(tau, prev->schedule);
        }
    }

    std::vector<SweepResult> out;
    for (int n : cfg.n_list) {
        if (cfg.trivial) {
            SweepResult r{"g0T", Ts, std::vector<double>(Ts.size()), "trivial", n};
            out.push_back(std::move(r));
        }
        if (cfg.optimized) {
            SweepResult r{"g0T", Ts, std::vector<double>(Ts.size()), "optimized", n};
            out.push_back(std::move(r));
        }
    }

    parallel_for(int(out.size()), cfg.jobs, [&](int idx) {
        SweepResult& curve = out[std::size_t(idx)];
        const SystemParams p = with_n(base, curve.n);
        if (curve.method == "trivial") {
            for (std::size_t j = 0; j < Ts.size(); ++j) {
                const CouplingSchedule& ref = lookup(Ts[j] / curve.n);
                curve.fidelities[j] = generation_fidelity(p, trivial_from_reference(p, Ts[j], ref));
            }
            return;
        }
        if (curve.n == 1) {
            for (std::size_t j = 0; j < Ts.size(); ++j)
                curve.fidelities[j] = generation_fidelity(p, lookup(Ts[j]));
            return;
        }
        std::optional<OptimizationReport> prev;
        for (std::size_t j = 0; j < Ts.size(); ++j) {
            CrabConfig c = cfg.crab;
            c.T = Ts[j];
            if (prev) {
                c.warm_amplitudes = prev->schedule.crab_params().amplitudes;
                c.warm_r = prev->schedule.crab_params().r;
            }
            prev = optimize_crab(p, c);
            curve.fidelities[j] = generation_fidelity(p, prev->schedule);
        }
    });
    return out;
}

std::optional<double> crossing_value(const SweepResult& curve, double level)
{
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        if (curve.fidelities[i] >= level) {
            if (i == 0)
                return curve.values[0];
            const double f0 = curve.fidelities[i - 1], f1 = curve.fidelities[i];
            const double x0 = curve.values[i - 1], x1 = curve.values[i];
            return x0 + (level - f0) / (f1 - f0) * (x1 - x0);
        }
    }
    return std::nullopt;
}

} // namespace omw
