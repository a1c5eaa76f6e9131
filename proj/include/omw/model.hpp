#pragma once

// Static algebra of the single-excitation sector: interaction and conditional
// Hamiltonians, the closed-form dark/bright eigenbasis, and the reduced
// dark-subspace matrices M, phi0, U, Lambda and V.

#include <cmath>
#include <limits>
#include <vector>

#include "omw/schedule.hpp"
#include "omw/types.hpp"

namespace omw {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Relative tolerance on the s_{i-1} s_i denominators and on 1 - g0^2/s_n^2.
inline constexpr double singular_tolerance = 1e-12;

/// s_i = sqrt(g_0^2 + ... + g_i^2), i = 0..n.
template <typename Derived>
DenseVector<typename Derived::Scalar> partial_norms(const Eigen::MatrixBase<Derived>& g)
{
    using Scalar = typename Derived::Scalar;
    if (!g.allFinite())
        throw Error("partial_norms: non-finite coupling");
    DenseVector<Scalar> s(g.size());
    Scalar acc(0);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        acc += g(i) * g(i);
        s(i) = std::sqrt(acc);
    }
    if (g.size() == 0 || s(g.size() - 1) == Scalar(0))
        throw Error("degenerate coupling vector");
    return s;
}

/// H_I in the basis (a0, a1..an, b_m). Only the mechanical row/column is nonzero.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> interaction_hamiltonian(const Eigen::MatrixBase<Derived>& g)
{
    using Scalar = typename Derived::Scalar;
    if (!g.allFinite())
        throw Error("interaction_hamiltonian: non-finite coupling");
    const Eigen::Index d = g.size() + 1;
    DenseMatrix<Scalar> h = DenseMatrix<Scalar>::Zero(d, d);
    h.col(d - 1).head(d - 1) = g;
    h.row(d - 1).head(d - 1) = g.transpose();
    return h;
}

/// H_c = H_I - (i/2) diag(kappa0, kappa_1..kappa_n, gamma_m).
template <typename Derived>
Eigen::MatrixXcd conditional_hamiltonian(const Eigen::MatrixBase<Derived>& g, const SystemParams& p)
{
    if (g.size() != p.n + 1)
        throw Error("conditional_hamiltonian: dimension mismatch between couplings and params");
    Eigen::MatrixXcd h = interaction_hamiltonian(g).template cast<Complex>();
    h.diagonal() -= Complex(0.0, 0.5) * p.damping_diagonal().cast<Complex>();
    return h;
}

template <typename Scalar>
struct DarkBasis {
    DenseMatrix<Scalar> dark;   ///< (n+2) x n, columns |phi_1>..|phi_n>
    DenseMatrix<Scalar> bright; ///< (n+2) x 2, columns |phi_{n+1}> (+s_n), |phi_{n+2}> (-s_n)
    DenseVector<Scalar> s;      ///< partial norms s_0..s_n

    /// First (optical) components of the dark vectors, unnormalized.
    DenseVector<Scalar> optical_overlap() const { return dark.row(0).transpose(); }

    /// Full orthonormal basis [dark | bright].
    DenseMatrix<Scalar> all() const
    {
        DenseMatrix<Scalar> b(dark.rows(), dark.cols() + 2);
        b << dark, bright;
        return b;
    }
};

/// Closed-form dark and bright eigenvectors of H_I.
///
/// |phi_1> = [g1, -g0, 0, ...] / s1,
/// |phi_k> = [g0 gk, ..., g_{k-1} gk, -s_{k-1}^2, 0, ...] / (s_{k-1} s_k),
/// |phi_{n+1,n+2}> = [g0, ..., gn, +-s_n] / (sqrt2 s_n).
template <typename Derived>
DarkBasis<typename Derived::Scalar> dark_basis(const Eigen::MatrixBase<Derived>& g)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = g.size() - 1;
    if (n < 1)
        throw Error("dark_basis: need at least one microwave coupling");
    DarkBasis<Scalar> b;
    b.s = partial_norms(g);
    const Scalar sn2 = b.s(n) * b.s(n);
    const Scalar tol = Scalar(singular_tolerance) * sn2;

    b.dark = DenseMatrix<Scalar>::Zero(n + 2, n);
    if (!(b.s(1) * b.s(1) > tol))
        throw Error("dark basis singular at this coupling vector");
    b.dark(0, 0) = g(1) / b.s(1);
    b.dark(1, 0) = -g(0) / b.s(1);
    for (Eigen::Index k = 2; k <= n; ++k) {
        const Scalar den = b.s(k - 1) * b.s(k);
        if (!(den > tol))
            throw Error("dark basis singular at this coupling vector");
        b.dark.col(k - 1).head(k) = g.head(k) * (g(k) / den);
        b.dark(k, k - 1) = -b.s(k - 1) * b.s(k - 1) / den;
    }

    b.bright.resize(n + 2, 2);
    const Scalar norm = Scalar(1) / (std::sqrt(Scalar(2)) * b.s(n));
    b.bright.col(0).head(n + 1) = g * norm;
    b.bright.col(1).head(n + 1) = g * norm;
    b.bright(n + 1, 0) = b.s(n) * norm;
    b.bright(n + 1, 1) = -b.s(n) * norm;
    return b;
}

/// 1 - g0^2/s_n^2, evaluated without cancellation.
template <typename Derived>
typename Derived::Scalar output_weight(const Eigen::MatrixBase<Derived>& g)
{
    const auto sn2 = g.squaredNorm();
    if (sn2 == 0)
        throw Error("degenerate coupling vector");
    return g.tail(g.size() - 1).squaredNorm() / sn2;
}

/// |phi0> = (phi_1^(1), ..., phi_n^(1)) / sqrt(1 - g0^2/s_n^2).
template <typename Derived>
DenseVector<typename Derived::Scalar> phi0_vector(const Eigen::MatrixBase<Derived>& g)
{
    using Scalar = typename Derived::Scalar;
    const Scalar w = output_weight(g);
    if (!(w > Scalar(singular_tolerance)))
        throw Error("phi0 undefined: microwave couplings vanish");
    return dark_basis(g).optical_overlap() / std::sqrt(w);
}

/// M = (1 - g0^2/s_n^2) |phi0><phi0|, the rank-one optical-loss generator on
/// dark coefficients. Built from the unnormalized overlaps so it stays defined
/// where phi0 is not (all g_i = 0 gives M = 0).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> m_matrix(const Eigen::MatrixBase<Derived>& g)
{
    const auto v = dark_basis(g).optical_overlap();
    return v * v.transpose();
}

/// Branch data for the degenerate completion of U. Reusing the frame of a
/// nearby coupling vector keeps U smooth across a finite-difference stencil.
struct CompletionFrame {
    Eigen::Index pivot = 0;
    std::vector<int> signs; ///< column signs for columns 2..n
};

namespace detail {

template <typename Scalar>
DenseMatrix<Scalar> householder_completion(const DenseVector<Scalar>& phi0, CompletionFrame& frame,
                                           bool choose)
{
    const Eigen::Index n = phi0.size();
    if (choose)
        phi0.cwiseAbs().maxCoeff(&frame.pivot);
    const Eigen::Index p = frame.pivot;
    const Scalar sigma = phi0(p) >= Scalar(0) ? Scalar(1) : Scalar(-1);
    DenseVector<Scalar> v = phi0;
    v(p) += sigma;
    const DenseMatrix<Scalar> h =
        DenseMatrix<Scalar>::Identity(n, n) - (Scalar(2) / v.squaredNorm()) * v * v.transpose();

    DenseMatrix<Scalar> u(n, n);
    u.col(0) = phi0;
    Eigen::Index c = 1;
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != p)
            u.col(c++) = h.col(j);

    if (choose) {
        frame.signs.assign(std::size_t(n > 1 ? n - 1 : 0), 1);
        for (Eigen::Index j = 1; j < n; ++j) {
            Eigen::Index i;
            u.col(j).cwiseAbs().maxCoeff(&i);
            frame.signs[std::size_t(j - 1)] = u(i, j) < Scalar(0) ? -1 : 1;
        }
    }
    for (Eigen::Index j = 1; j < n; ++j)
        u.col(j) *= Scalar(frame.signs[std::size_t(j - 1)]);
    return u;
}

} // namespace detail

/// U = [phi0, completion]: orthogonal, diagonalizes M with Lambda_11 = 1 - g0^2/s_n^2.
/// Columns 2..n come from a Householder reflector pivoted on the largest
/// component of phi0, each flipped so its largest-magnitude entry is positive.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> u_matrix(const Eigen::MatrixBase<Derived>& g,
                                               CompletionFrame* frame_out = nullptr)
{
    using Scalar = typename Derived::Scalar;
    CompletionFrame frame;
    DenseMatrix<Scalar> u = detail::householder_completion<Scalar>(phi0_vector(g), frame, true);
    if (frame_out)
        *frame_out = frame;
    return u;
}

/// U evaluated on a fixed completion branch.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> u_matrix_in_frame(const Eigen::MatrixBase<Derived>& g,
                                                        CompletionFrame frame)
{
    using Scalar = typename Derived::Scalar;
    return detail::householder_completion<Scalar>(phi0_vector(g), frame, false);
}

/// Lambda = U^T M U, diagonal with a single nonzero entry.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> lambda_matrix(const Eigen::MatrixBase<Derived>& g)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = g.size() - 1;
    DenseMatrix<Scalar> l = DenseMatrix<Scalar>::Zero(n, n);
    l(0, 0) = output_weight(g);
    return l;
}

struct VEstimate {
    Eigen::MatrixXd V;
    double richardson_gap = 0.0; ///< max |V_h - V_2h|
    bool converged = true;       ///< richardson_gap <= 1e-6
};

/// V(t) = (dU^T/dt) U by a five-point central difference on a fixed completion
/// branch. h defaults to T/1e5 and t +- 2h must lie inside [0, T]. The
/// Richardson gap compares against step 2h (or h/2 when 2h does not fit).
VEstimate v_matrix(const CouplingSchedule& sched, double t, double h = 0.0);

/// V(t) on a given completion branch, without the Richardson comparison.
/// Falls back to one-sided fourth-order stencils within 2h of the ends.
Eigen::MatrixXd v_matrix_in_frame(const CouplingSchedule& sched, double t, double h,
                                  const CompletionFrame& frame);

/// |dg_i/dt| / g_i^2 for i = 1..n (adiabaticity diagnostic; no threshold).
Eigen::VectorXd adiabaticity_ratio(const CouplingSchedule& sched, double t, double h = 0.0);

} // namespace omw
