#include "omw/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace omw::io {

namespace fs = std::filesystem;

namespace {

json vec_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vec(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

const char* profile_name(Profile::Kind k)
{
    switch (k) {
    case Profile::Kind::flat:
        return "flat";
    case Profile::Kind::sine_bump:
        return "sine_bump";
    case Profile::Kind::harmonic:
        return "harmonic";
    }
    return "flat";
}

Profile::Kind profile_kind(const std::string& s)
{
    if (s == "flat")
        return Profile::Kind::flat;
    if (s == "sine_bump")
        return Profile::Kind::sine_bump;
    if (s == "harmonic")
        return Profile::Kind::harmonic;
    throw Error("unknown profile kind '" + s + "'");
}

/// W coefficients as [re, im] pairs or plain reals.
Eigen::VectorXcd json_w(const json& j)
{
    if (!j.is_array() || j.empty())
        throw Error("W coefficients must be a non-empty array");
    Eigen::VectorXcd w(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].is_array())
            w(Eigen::Index(i)) = Complex(j[i].at(0).get<double>(), j[i].at(1).get<double>());
        else
            w(Eigen::Index(i)) = j[i].get<double>();
    }
    return w;
}

/// Accepts coefficients written to a few decimals and rescales them exactly.
Eigen::VectorXcd unit_w(const json& j)
{
    Eigen::VectorXcd w = json_w(j);
    if (std::abs(w.norm() - 1.0) > 1e-6)
        throw Error("W coefficients must have unit norm");
    return w.normalized();
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    if (path.is_relative())
        path = base / path;
    if (!fs::exists(path))
        throw Error("referenced file does not exist: " + path.string());
    return path;
}

} // namespace

void atomic_write(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json schedule_to_json(const CouplingSchedule& sched)
{
    json j;
    j["format_version"] = schedule_format_version;
    j["T"] = sched.duration();
    j["n"] = sched.n();
    j["reversed"] = sched.reversed();
    switch (sched.kind()) {
    case CouplingSchedule::Kind::crab: {
        const CrabParams& c = sched.crab_params();
        j["kind"] = "crab";
        j["m"] = c.m;
        j["g0_fixed"] = c.g0_fixed;
        std::vector<double> a;
        for (int k = 0; k < c.m; ++k)
            for (Eigen::Index i = 0; i < c.amplitudes.cols(); ++i)
                a.push_back(c.amplitudes(k, i));
        j["A"] = a;
        j["r"] = vec_json(c.r);
        j["seed"] = c.seed;
        break;
    }
    case CouplingSchedule::Kind::piecewise: {
        j["kind"] = "piecewise";
        json segs = json::array();
        for (const Segment& s : sched.piecewise_params().segments) {
            json p{{"kind", profile_name(s.profile.kind)}, {"active_fraction", s.profile.active_fraction}};
            p["a"] = vec_json(s.profile.a);
            p["r"] = vec_json(s.profile.r);
            segs.push_back(json{{"duration", s.duration}, {"g", vec_json(s.g)}, {"profile", p}});
        }
        j["segments"] = segs;
        break;
    }
    case CouplingSchedule::Kind::constant_ratio: {
        const auto& c = sched.constant_ratio_params();
        j["kind"] = "constant_ratio";
        j["g_initial"] = vec_json(c.g_initial);
        j["envelope"] = vec_json(c.envelope);
        break;
    }
    }
    return j;
}

CouplingSchedule schedule_from_json(const json& j)
{
    try {
        if (j.at("format_version").get<int>() != schedule_format_version)
            throw Error("unsupported schedule format_version");
        const std::string kind = j.at("kind").get<std::string>();
        const double T = j.at("T").get<double>();
        std::optional<CouplingSchedule> s;
        if (kind == "crab") {
            CrabParams c;
            c.m = j.at("m").get<int>();
            const int n = j.at("n").get<int>();
            const auto a = j.at("A").get<std::vector<double>>();
            if (int(a.size()) != c.m * n)
                throw Error("schedule file: A must have m*n entries");
            c.amplitudes.resize(c.m, n);
            for (int k = 0; k < c.m; ++k)
                for (int i = 0; i < n; ++i)
                    c.amplitudes(k, i) = a[std::size_t(k * n + i)];
            c.r = json_vec(j.at("r"));
            c.g0_fixed = j.at("g0_fixed").get<double>();
            c.seed = j.value("seed", std::uint64_t(0));
            s = CouplingSchedule::crab(T, std::move(c));
        } else if (kind == "piecewise") {
            std::vector<Segment> segs;
            for (const json& js : j.at("segments")) {
                Segment seg;
                seg.duration = js.at("duration").get<double>();
                seg.g = json_vec(js.at("g"));
                const json& p = js.at("profile");
                seg.profile.kind = profile_kind(p.at("kind").get<std::string>());
                seg.profile.active_fraction = p.value("active_fraction", 1.0);
                seg.profile.a = json_vec(p.value("a", json::array()));
                seg.profile.r = json_vec(p.value("r", json::array()));
                segs.push_back(std::move(seg));
            }
            s = CouplingSchedule::piecewise(std::move(segs));
        } else if (kind == "constant_ratio") {
            s = CouplingSchedule::constant_ratio(T, json_vec(j.at("g_initial")),
                                                 json_vec(j.value("envelope", json::array())));
        } else {
            throw Error("unknown schedule kind '" + kind + "'");
        }
        if (j.value("reversed", false))
            s = s->time_reversed();
        return *s;
    } catch (const json::exception& e) {
        throw Error(std::string("schedule file: ") + e.what());
    }
}

void save_schedule(const fs::path& path, const CouplingSchedule& sched)
{
    atomic_write(path, schedule_to_json(sched).dump(2) + "\n");
}

CouplingSchedule load_schedule(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("cannot parse " + path.string() + ": " + e.what());
    }
    return schedule_from_json(j);
}

json report_to_json(const OptimizationReport& report)
{
    json j;
    j["format_version"] = 1;
    j["objective"] = report.objective;
    j["objective_at_zero"] = report.objective_at_zero;
    j["per_basis_residuals"] = vec_json(report.per_basis_residuals);
    j["evaluations"] = report.evaluations;
    j["seed"] = report.seed;
    j["best_restart"] = report.best_restart;
    j["budget_exhausted"] = report.budget_exhausted;
    if (report.budget_exhausted)
        j["warning"] = "evaluation budget exhausted; best-so-far schedule returned";
    j["objective_history"] = report.objective_history;
    j["schedule"] = schedule_to_json(report.schedule);
    return j;
}

std::string units_header(double g0_ref)
{
    return "# units=g0 g0_ref=" + format_double(g0_ref) + "\n";
}

std::string pulse_csv(const PulseShape& pulse, double g0_ref)
{
    std::string out = units_header(g0_ref) + "t,re_f,im_f\n";
    for (int k = 0; k <= pulse.grid.N; ++k) {
        const Complex f = pulse.samples(k);
        out += format_double(pulse.grid.t(k)) + "," + format_double(f.real()) + "," + format_double(f.imag())
            + "\n";
    }
    return out;
}

PulseShape parse_pulse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<double> t;
    std::vector<Complex> f;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            if (line.rfind("t,re_f,im_f", 0) != 0)
                throw Error("pulse CSV: expected header t,re_f,im_f");
            header = true;
            continue;
        }
        double a, b, c;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
            throw Error("pulse CSV: malformed row '" + line + "'");
        t.push_back(a);
        f.emplace_back(b, c);
    }
    if (t.size() < 2)
        throw Error("pulse CSV: no samples");
    const int N = int(t.size()) - 1;
    PulseShape p{TimeGrid::make(t.back(), N), Eigen::VectorXcd(N + 1)};
    for (int k = 0; k <= N; ++k) {
        if (std::abs(t[std::size_t(k)] - p.grid.t(k)) > 1e-9 * p.grid.T)
            throw Error("pulse CSV: samples are not on a uniform grid");
        p.samples(k) = f[std::size_t(k)];
    }
    return p;
}

std::string trajectory_csv(const Trajectory& tr, double g0_ref)
{
    const Eigen::Index d = tr.states.rows();
    std::string out = units_header(g0_ref) + "t";
    for (Eigen::Index i = 0; i < d; ++i)
        out += ",re_d" + std::to_string(i) + ",im_d" + std::to_string(i);
    out += ",norm2,flux_out_cum\n";
    for (int k = 0; k <= tr.grid.N; ++k) {
        out += format_double(tr.grid.t(k));
        for (Eigen::Index i = 0; i < d; ++i)
            out += "," + format_double(tr.states(i, k).real()) + "," + format_double(tr.states(i, k).imag());
        out += "," + format_double(tr.ledger.norm2(k)) + "," + format_double(tr.ledger.flux_out(k)) + "\n";
    }
    return out;
}

std::string sweep_csv(const SweepResult& sweep, double g0_ref)
{
    std::string out = units_header(g0_ref) + "# axis=" + sweep.axis + "\naxis_value,fidelity,method,n\n";
    for (std::size_t i = 0; i < sweep.values.size(); ++i)
        out += format_double(sweep.values[i]) + "," + format_double(sweep.fidelities[i]) + "," + sweep.method
            + "," + std::to_string(sweep.n) + "\n";
    return out;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir, const ConfigOverrides& overrides)
{
    RunConfig cfg;
    try {
        cfg.units = overrides.units.value_or(doc.value("units", std::string("g0")));
        if (cfg.units != "g0" && cfg.units != "raw")
            throw Error("units must be 'raw' or 'g0'");

        const json& sys = doc.at("system");
        SystemParams p;
        p.n = sys.at("n").get<int>();
        p.kappa0 = sys.value("kappa0", 0.0);
        const json kj = sys.value("kappa", json(0.0));
        p.kappa = kj.is_array() ? json_vec(kj) : Eigen::VectorXd::Constant(p.n, kj.get<double>());
        p.gamma_m = sys.value("gamma_m", 0.0);
        if (sys.contains("omega_m"))
            p.omega_m = sys.at("omega_m").get<double>();
        p.g0_ref = sys.value("g0_ref", 1.0);
        p.validate();
        const bool raw = cfg.units == "raw";
        const double g0_ref = p.g0_ref;
        auto rate = [&](double x) { return raw ? x / g0_ref : x; };
        auto time = [&](double x) { return raw ? x * g0_ref : x; };
        cfg.system = raw ? p.normalized() : p;
        cfg.system.g0_ref = g0_ref;

        cfg.seed = overrides.seed.value_or(doc.value("seed", std::uint64_t(1)));
        if (doc.contains("grid"))
            cfg.grid_N = doc.at("grid").value("N", 0);

        if (doc.contains("crab")) {
            const json& c = doc.at("crab");
            CrabConfig cc;
            cc.m = c.value("m", cc.m);
            cc.T = time(c.value("T", cc.T));
            cc.g0_fixed = rate(c.value("g0", raw ? g0_ref : 1.0));
            cc.amplitude_bound = c.value("amplitude_bound", cc.amplitude_bound);
            cc.restarts = c.value("restarts", cc.restarts);
            cc.max_evaluations = c.value("max_evaluations", cc.max_evaluations);
            cc.initial_step = c.value("initial_step", cc.initial_step);
            cc.grid_N = c.value("grid_N", cfg.grid_N);
            cc.seed = cfg.seed;
            cc.validate(cfg.system.n);
            cfg.crab = cc;
        }
        if (doc.contains("schedule"))
            cfg.schedule_file = resolve(base_dir, doc.at("schedule").get<std::string>());
        if (doc.contains("pulse"))
            cfg.pulse_file = resolve(base_dir, doc.at("pulse").get<std::string>());

        if (doc.contains("state")) {
            cfg.state_given = true;
            const json& s = doc.at("state");
            if (!(s.is_string() && s.get<std::string>() == "empty"))
                cfg.state = unit_w(s.is_object() ? s.at("w") : s);
        }
        if (doc.contains("targets"))
            for (const json& t : doc.at("targets"))
                cfg.targets.push_back(unit_w(t));
        for (const auto& w : cfg.targets)
            if (w.size() != cfg.system.n)
                throw Error("target has wrong number of coefficients");
        if (cfg.state && cfg.state->size() != cfg.system.n)
            throw Error("state has wrong number of coefficients");

        if (doc.contains("inject")) {
            const json& ij = doc.at("inject");
            cfg.reverse_pulse = ij.value("reverse_pulse", true);
            cfg.reverse_schedule = ij.value("reverse_schedule", true);
            cfg.normalize_pulse = ij.value("normalize_pulse", true);
        }

        if (doc.contains("sweep")) {
            cfg.sweep = doc.at("sweep");
            if (raw) {
                if (cfg.sweep.contains("values")) {
                    auto v = cfg.sweep["values"].get<std::vector<double>>();
                    for (double& x : v)
                        x = rate(x);
                    cfg.sweep["values"] = v;
                }
                if (cfg.sweep.contains("T")) {
                    auto v = cfg.sweep["T"].get<std::vector<double>>();
                    for (double& x : v)
                        x = time(x);
                    cfg.sweep["T"] = v;
                }
            }
        }
        if (doc.contains("debug"))
            cfg.flip_input_sign = doc.at("debug").value("flip_input_sign", false);
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const fs::path& path, const ConfigOverrides& overrides)
{
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.has_parent_path() ? path.parent_path() : fs::path("."), overrides);
}

} // namespace omw::io
