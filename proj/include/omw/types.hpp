#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace omw {

using Complex = std::complex<double>;

/// Real coupling strengths (g0, g1, ..., gn).
template <typename Scalar = double>
using CouplingVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Single-excitation amplitudes ordered (a0, a1, ..., an, b_m).
/// Index 0 is the optical cavity, index n+1 the mechanical mode.
using ExcitationState = Eigen::VectorXcd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a trajectory leaves the finite range; carries the time of failure.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double time)
        : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

struct ValidityFlags {
    bool resolved_sideband = true; ///< omega_m / kappa0 >= 10
    bool hierarchy = true;         ///< kappa0 / max(gamma_m, kappa_i) >= 10
    bool ok() const { return resolved_sideband && hierarchy; }
};

/// Physical arena: cavity count and damping rates.
///
/// Rates are stored in whatever unit the caller chose; `normalized()` rescales
/// everything by `g0_ref` so that the reference coupling becomes 1.
struct SystemParams {
    int n = 1;
    double kappa0 = 0.0;
    Eigen::VectorXd kappa;           ///< microwave cavity dampings, length n
    double gamma_m = 0.0;
    std::optional<double> omega_m;   ///< validity checks only
    double g0_ref = 1.0;

    static SystemParams uniform(int n, double kappa0, double kappa_i, double gamma_m,
                                double g0_ref = 1.0)
    {
        SystemParams p;
        p.n = n;
        p.kappa0 = kappa0;
        p.kappa = Eigen::VectorXd::Constant(n, kappa_i);
        p.gamma_m = gamma_m;
        p.g0_ref = g0_ref;
        return p;
    }

    int dim() const { return n + 2; }

    void validate() const
    {
        if (n < 1)
            throw Error("SystemParams: n must be >= 1");
        if (kappa.size() != n)
            throw Error("SystemParams: kappa must have n entries");
        auto bad = [](double x) { return !std::isfinite(x) || x < 0.0; };
        if (bad(kappa0) || bad(gamma_m) || kappa.unaryExpr(bad).any())
            throw Error("SystemParams: rates must be finite and >= 0");
        if (!(std::isfinite(g0_ref) && g0_ref > 0.0))
            throw Error("SystemParams: g0_ref must be > 0");
        if (omega_m && !(std::isfinite(*omega_m) && *omega_m > 0.0))
            throw Error("SystemParams: omega_m must be > 0");
    }

    ValidityFlags validity() const
    {
        ValidityFlags f;
        if (omega_m && kappa0 > 0.0)
            f.resolved_sideband = *omega_m / kappa0 >= 10.0;
        const double slow = std::max(gamma_m, kappa.size() ? kappa.maxCoeff() : 0.0);
        if (slow > 0.0)
            f.hierarchy = kappa0 / slow >= 10.0;
        return f;
    }

    /// Rates in units of g0_ref (g0_ref becomes 1).
    SystemParams normalized() const
    {
        SystemParams q = *this;
        q.kappa0 /= g0_ref;
        q.kappa /= g0_ref;
        q.gamma_m /= g0_ref;
        if (q.omega_m)
            *q.omega_m /= g0_ref;
        q.g0_ref = 1.0;
        return q;
    }

    /// Damping rates along the basis (a0, a1..an, b_m).
    Eigen::VectorXd damping_diagonal() const
    {
        Eigen::VectorXd d(dim());
        d(0) = kappa0;
        d.segment(1, n) = kappa;
        d(n + 1) = gamma_m;
        return d;
    }
};

/// Embeds W coefficients (w1..wn) into the full single-excitation basis.
inline ExcitationState embed_w(const Eigen::VectorXcd& w)
{
    ExcitationState psi = ExcitationState::Zero(w.size() + 2);
    psi.segment(1, w.size()) = w;
    return psi;
}

inline ExcitationState basis_state(int n, int i)
{
    ExcitationState psi = ExcitationState::Zero(n + 2);
    psi(i) = 1.0;
    return psi;
}

} // namespace omw
