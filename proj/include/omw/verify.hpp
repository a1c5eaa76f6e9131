#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omw/schedule.hpp"
#include "omw/types.hpp"

namespace omw {

struct CheckResult {
    std::string name;
    double value = 0.0;     ///< measured quantity, compared with `threshold`
    double threshold = 0.0; ///< pass when value < threshold
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    SystemParams system = SystemParams::uniform(3, 10.0, 1e-5, 1e-3);
    std::optional<CouplingSchedule> schedule; ///< used for the ledger checks when given
    std::uint64_t seed = 1;
    int random_schedules = 20;
    double T = 100.0;
    bool flip_input_sign = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

/// Model and dynamics identity checks: dark/bright spectrum, basis
/// orthonormality, V antisymmetry, lossless norm conservation, emission and
/// injection photon ledgers, analytic vs numeric reduced dynamics and the
/// rotated-frame norm drift with kappa0 = 0.
VerifyReport run_verification(const VerifyOptions& opts);

nlohmann::json verify_report_json(const VerifyReport& report);
std::string verify_report_text(const VerifyReport& report);

} // namespace omw
