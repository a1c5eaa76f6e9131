#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "omw/analysis.hpp"
#include "omw/control.hpp"
#include "omw/io.hpp"
#include "omw/verify.hpp"

namespace fs = std::filesystem;
using namespace omw;

namespace {

enum Exit { exit_ok = 0, exit_check = 1, exit_usage = 2 };

/// Configuration problems that should map to the usage exit code.
struct UsageError : Error {
    using Error::Error;
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int jobs = 1;
    std::optional<std::string> units;
};

io::RunConfig load(const Options& o, bool required = true)
{
    io::ConfigOverrides ov{o.seed, o.units};
    if (o.config.empty()) {
        if (required)
            throw UsageError("--config is required for this command");
        io::json doc{{"system", {{"n", 3}, {"kappa0", 10.0}, {"kappa", 1e-5}, {"gamma_m", 1e-3}}}};
        return io::parse_config(doc, ".", ov);
    }
    try {
        return io::load_config(o.config, ov);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

TimeGrid grid_for(const io::RunConfig& cfg, double T)
{
    return cfg.grid_N > 0 ? TimeGrid::make(T, cfg.grid_N) : TimeGrid::for_params(cfg.system, T);
}

CouplingSchedule schedule_of(const io::RunConfig& cfg)
{
    if (!cfg.schedule_file)
        throw UsageError("config has no \"schedule\" file");
    std::optional<CouplingSchedule> loaded;
    try {
        loaded = io::load_schedule(*cfg.schedule_file);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const CouplingSchedule& s = *loaded;
    if (s.n() != cfg.system.n)
        throw UsageError("schedule has n = " + std::to_string(s.n()) + " but system has n = "
                         + std::to_string(cfg.system.n));
    return s;
}

IntegratorOptions integrator(const io::RunConfig& cfg)
{
    IntegratorOptions o;
    o.input_sign = cfg.flip_input_sign ? -1.0 : 1.0;
    return o;
}

void print_validity(const SystemParams& p)
{
    const ValidityFlags f = p.validity();
    if (!f.resolved_sideband)
        std::cerr << "warning: omega_m / kappa0 < 10, outside the resolved-sideband regime\n";
    if (!f.hierarchy)
        std::cerr << "warning: kappa0 is not >= 10x the slow damping rates\n";
}

int cmd_verify(const Options& o)
{
    const io::RunConfig cfg = load(o, false);
    VerifyOptions vo;
    vo.system = cfg.system;
    vo.seed = cfg.seed;
    vo.flip_input_sign = cfg.flip_input_sign;
    if (cfg.schedule_file)
        vo.schedule = schedule_of(cfg);
    const VerifyReport report = run_verification(vo);
    const std::string text = verify_report_text(report);
    std::cout << text;
    io::atomic_write(fs::path(o.out) / "verify_report.json", verify_report_json(report).dump(2) + "\n");
    io::atomic_write(fs::path(o.out) / "verify_report.txt", text);
    return report.passed() ? exit_ok : exit_check;
}

int cmd_optimize(const Options& o)
{
    const io::RunConfig cfg = load(o);
    if (!cfg.crab)
        throw UsageError("config has no \"crab\" section");
    print_validity(cfg.system);
    const OptimizationReport rep = optimize_crab(cfg.system, *cfg.crab);
    io::save_schedule(fs::path(o.out) / "schedule.json", rep.schedule);
    io::atomic_write(fs::path(o.out) / "report.json", io::report_to_json(rep).dump(2) + "\n");
    std::printf("objective %.6e (A = 0: %.6e), %d evaluations\n", rep.objective, rep.objective_at_zero,
                rep.evaluations);
    for (Eigen::Index i = 0; i < rep.per_basis_residuals.size(); ++i)
        std::printf("residual[%d] %.6e\n", int(i + 1), rep.per_basis_residuals(i));
    if (rep.budget_exhausted)
        std::cerr << "warning: evaluation budget exhausted\n";
    return exit_ok;
}

int cmd_emit(const Options& o)
{
    const io::RunConfig cfg = load(o);
    const CouplingSchedule sched = schedule_of(cfg);
    if (!cfg.state_given)
        throw UsageError("config has no \"state\"");
    const ExcitationState psi0 = cfg.state ? embed_w(*cfg.state) : ExcitationState::Zero(cfg.system.dim());
    const Trajectory tr = evolve_emission(cfg.system, sched, psi0, grid_for(cfg, sched.duration()), integrator(cfg));
    const double g0_ref = cfg.system.g0_ref;
    io::atomic_write(fs::path(o.out) / "emit_trajectory.csv", io::trajectory_csv(tr, g0_ref));
    io::atomic_write(fs::path(o.out) / "emit_pulse.csv", io::pulse_csv(tr.emitted, g0_ref));
    std::printf("photon content %.10f, residual %.3e, ledger imbalance %.3e\n", tr.emitted.photon_content(),
                tr.residual(), tr.ledger.max_imbalance());
    return exit_ok;
}

int cmd_inject(const Options& o)
{
    const io::RunConfig cfg = load(o);
    CouplingSchedule sched = schedule_of(cfg);
    if (!cfg.pulse_file)
        throw UsageError("config has no \"pulse\" file");
    std::optional<PulseShape> read;
    try {
        read = io::parse_pulse_csv(io::read_file(*cfg.pulse_file));
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    PulseShape pulse = *read;
    if (cfg.reverse_pulse)
        pulse = time_reverse(pulse);
    if (cfg.normalize_pulse)
        pulse = pulse.normalized();
    if (cfg.reverse_schedule)
        sched = time_reverse(sched);
    if (std::abs(pulse.grid.T - sched.duration()) > 1e-9 * sched.duration())
        throw UsageError("pulse duration does not match the schedule duration");
    const ExcitationState psi0 = cfg.state ? embed_w(*cfg.state) : ExcitationState::Zero(cfg.system.dim());
    const Trajectory tr = evolve_injection(cfg.system, sched, pulse, psi0, pulse.grid, integrator(cfg));
    const double g0_ref = cfg.system.g0_ref;
    io::atomic_write(fs::path(o.out) / "inject_trajectory.csv", io::trajectory_csv(tr, g0_ref));
    io::atomic_write(fs::path(o.out) / "inject_reflected.csv", io::pulse_csv(tr.emitted, g0_ref));
    std::printf("absorbed norm %.10f, ledger imbalance %.3e\n", tr.final_state().squaredNorm(),
                tr.ledger.max_imbalance());
    for (std::size_t i = 0; i < cfg.targets.size(); ++i)
        std::printf("F[%zu] %.10f\n", i + 1, overlap_fidelity(embed_w(cfg.targets[i]), tr.final_state()));
    return exit_ok;
}

int cmd_roundtrip(const Options& o)
{
    const io::RunConfig cfg = load(o);
    const CouplingSchedule sched = schedule_of(cfg);
    std::vector<WState> targets;
    for (const auto& w : cfg.targets)
        targets.emplace_back(w);
    if (targets.empty() && cfg.state)
        targets.emplace_back(*cfg.state);
    if (targets.empty())
        targets = canonical_w_states(cfg.system.n);
    const TimeGrid grid = grid_for(cfg, sched.duration());
    const double g0_ref = cfg.system.g0_ref;
    io::json summary;
    summary["targets"] = io::json::array();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const GenerationRun run = generate_w_state(cfg.system, sched, targets[i], grid);
        const std::string stem = "roundtrip_" + std::to_string(i + 1);
        io::atomic_write(fs::path(o.out) / (stem + "_emission.csv"), io::trajectory_csv(run.emission, g0_ref));
        io::atomic_write(fs::path(o.out) / (stem + "_pulse.csv"), io::pulse_csv(run.incident, g0_ref));
        io::atomic_write(fs::path(o.out) / (stem + "_generation.csv"), io::trajectory_csv(run.injection, g0_ref));
        std::printf("F[%zu] %.10f  (transmission %.10f)\n", i + 1, run.fidelity, run.transmission);
        summary["targets"].push_back({{"fidelity", run.fidelity}, {"transmission", run.transmission}});
    }
    io::atomic_write(fs::path(o.out) / "roundtrip.json", summary.dump(2) + "\n");
    return exit_ok;
}

int cmd_sweep(const Options& o)
{
    const io::RunConfig cfg = load(o);
    const io::json& s = cfg.sweep;
    if (!s.is_object())
        throw UsageError("config has no \"sweep\" section");
    const std::string type = s.value("type", std::string("damping"));
    const double g0_ref = cfg.system.g0_ref;
    try {
        if (type == "damping") {
            const std::string axis = s.at("axis").get<std::string>();
            if (axis != "kappa_i" && axis != "gamma_m")
                throw UsageError("sweep axis must be kappa_i or gamma_m");
            const auto values = s.at("values").get<std::vector<double>>();
            const SweepResult r = sweep_damping(cfg.system, schedule_of(cfg),
                                                axis == "kappa_i" ? DampingAxis::kappa_i : DampingAxis::gamma_m,
                                                values, o.jobs);
            io::atomic_write(fs::path(o.out) / ("sweep_" + axis + ".csv"), io::sweep_csv(r, g0_ref));
            for (std::size_t i = 0; i < r.values.size(); ++i)
                std::printf("%s %.6e  F %.10f\n", axis.c_str(), r.values[i], r.fidelities[i]);
        } else if (type == "time") {
            if (!cfg.crab)
                throw UsageError("time sweep needs a \"crab\" section");
            TimeSweepConfig tc;
            tc.n_list = s.value("n", tc.n_list);
            tc.T_values = s.at("T").get<std::vector<double>>();
            const auto methods = s.value("methods", std::vector<std::string>{"trivial", "optimized"});
            tc.trivial = std::find(methods.begin(), methods.end(), "trivial") != methods.end();
            tc.optimized = std::find(methods.begin(), methods.end(), "optimized") != methods.end();
            tc.crab = *cfg.crab;
            tc.jobs = o.jobs;
            for (const SweepResult& r : sweep_time(cfg.system, tc)) {
                const std::string name = "sweep_time_" + r.method + "_n" + std::to_string(r.n) + ".csv";
                io::atomic_write(fs::path(o.out) / name, io::sweep_csv(r, g0_ref));
                for (std::size_t i = 0; i < r.values.size(); ++i)
                    std::printf("%s n=%d g0T %.4f  F %.10f\n", r.method.c_str(), r.n, r.values[i], r.fidelities[i]);
            }
        } else {
            throw UsageError("unknown sweep type '" + type + "'");
        }
    } catch (const io::json::exception& e) {
        throw UsageError(std::string("sweep config: ") + e.what());
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optomechanical W-state emission and generation simulator"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    std::string units;
    app.add_option("--config", o.config, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--jobs", o.jobs, "parallel sweep workers")->check(CLI::PositiveNumber);
    auto* units_opt = app.add_option("--units", units, "units of the numbers in the config")
                          ->check(CLI::IsMember({"raw", "g0"}));

    int (*command)(const Options&) = nullptr;
    struct Entry {
        const char* name;
        const char* help;
        int (*fn)(const Options&);
    };
    const Entry entries[] = {
        {"verify", "model and dynamics identity checks", cmd_verify},
        {"optimize", "CRAB optimization of the emission schedule", cmd_optimize},
        {"emit", "free emission from an initial state", cmd_emit},
        {"inject", "drive the system with an incident pulse", cmd_inject},
        {"roundtrip", "emit, time-reverse and regenerate each target W state", cmd_roundtrip},
        {"sweep", "fidelity versus damping or duration", cmd_sweep},
    };
    for (const Entry& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        sub->fallthrough();
        sub->callback([&command, fn = e.fn] { command = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }
    if (seed_opt->count())
        o.seed = seed;
    if (units_opt->count())
        o.units = units;

    try {
        return command(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check;
    }
}
