#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omw/analysis.hpp"
#include "omw/control.hpp"
#include "omw/dynamics.hpp"

namespace omw::io {

using json = nlohmann::json;

inline constexpr int schedule_format_version = 1;

/// Writes `content` to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// %.17g
std::string format_double(double x);

json schedule_to_json(const CouplingSchedule& sched);
CouplingSchedule schedule_from_json(const json& j);
void save_schedule(const std::filesystem::path& path, const CouplingSchedule& sched);
CouplingSchedule load_schedule(const std::filesystem::path& path);

json report_to_json(const OptimizationReport& report);

/// Header comment line recording the unit normalization, e.g. "# units=g0 g0_ref=1".
std::string units_header(double g0_ref);

/// Columns t,re_f,im_f.
std::string pulse_csv(const PulseShape& pulse, double g0_ref = 1.0);
PulseShape parse_pulse_csv(const std::string& text);

/// Columns t,re_d0,im_d0,...,re_d{n+1},im_d{n+1},norm2,flux_out_cum.
std::string trajectory_csv(const Trajectory& tr, double g0_ref = 1.0);

/// Columns axis_value,fidelity,method,n.
std::string sweep_csv(const SweepResult& sweep, double g0_ref = 1.0);

/// Everything a CLI run needs, with rates already normalized to g0.
struct RunConfig {
    SystemParams system;     ///< normalized (g0_ref kept for output headers)
    std::string units = "g0";
    std::optional<CrabConfig> crab;
    std::optional<std::filesystem::path> schedule_file;
    std::optional<std::filesystem::path> pulse_file;
    int grid_N = 0;
    std::uint64_t seed = 1;
    std::optional<Eigen::VectorXcd> state; ///< W coefficients; empty optional means "empty"
    bool state_given = false;
    std::vector<Eigen::VectorXcd> targets;
    bool reverse_pulse = true;
    bool reverse_schedule = true;
    bool normalize_pulse = true;
    json sweep;
    bool flip_input_sign = false;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> units;
};

/// Parses a config document. Relative file paths resolve against `base_dir`.
RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir,
                       const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

} // namespace omw::io
