// SPDX-License-Identifier: MIT
/**
 * @file picard.hpp
 * @brief Successive approximation for x(t) = ∫₀ᵗ K(t, s, x(s)) ds and
 *        certification of the result against a majorant.
 */
#pragma once

#include "veq/expr.hpp"
#include "veq/majorant.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace veq {

struct ProblemSpec {
    /// K(t, s, x).
    Expr kernel;
    std::optional<MajorantProblem> majorant;
    double horizon = 1.0;
    /// Number of uniform panels; the grid has grid_n + 1 points.
    int grid_n = 1024;
    int max_iters = 500;
    double conv_tol = 1e-12;

    /// Throws ValidationError on a broken invariant, including
    /// horizon >= T₁ when the attached majorant blows up.
    void validate() const;
};

struct Trajectory {
    std::vector<double> grid;
    std::vector<double> values;
    int iterations_used = 0;
    /// Sup-norm change produced by the last iteration.
    double sup_delta = 0.0;
    bool converged = false;
};

/// Called after each iteration n >= 1 with the new grid values.
using IterateObserver = std::function<void(int n, std::span<const double> values)>;

/// Picard iteration from x₀ ≡ 0 with trapezoid quadrature over the grid
/// nodes.  Stops once the sup-norm update is <= conv_tol or after
/// max_iters.  A non-finite value throws ConvergenceError naming (n, t):
/// the iterates blew up inside the horizon.
Trajectory picard_solve(const ProblemSpec& spec, const IterateObserver& observer = {});

struct CertificateRow {
    double t;
    double x;
    double majorant;
    double slack;  // majorant - |x|
};

struct CertificateReport {
    std::vector<CertificateRow> rows;
    double min_slack = 0.0;
    bool holds = false;
};

/// Row-wise |x(tᵢ)| <= x̂(tᵢ) + certify_tol.  Throws OutOfDomainError if a
/// grid point lies at or beyond T₁.
CertificateReport certify(const Trajectory& traj, const MajorantSolution& maj, double certify_tol = 1e-6);

struct BoundViolation {
    enum class Kind { Value, Derivative };
    Kind kind;
    double t, s, x;
    double lhs;  // |K| or |∂K/∂x|
    double rhs;  // m(s)γ(|x|) or m(s)γ'(|x|)
};

struct BoundCheckReport {
    int samples = 0;
    double x_range = 0.0;
    int value_violations = 0;
    int derivative_violations = 0;
    /// Samples where K, ∂K/∂x or γ' could not be evaluated.
    int skipped = 0;
    /// First violations found (at most 20).
    std::vector<BoundViolation> examples;

    bool passed() const { return value_violations == 0 && derivative_violations == 0; }
};

/// Random samples of 0 < s < t < horizon, |x| <= x_range checking
/// |K| <= m(s)γ(|x|) and |∂K/∂x| <= m(s)γ'(|x|).  x_range is x̂(horizon)
/// when the majorant is global or blows up after the horizon, else 10.
/// Passing is evidence, not proof.  Requires spec.majorant.
BoundCheckReport bound_check(const ProblemSpec& spec, int samples, std::uint64_t seed = 20240501);

}  // namespace veq
