// SPDX-License-Identifier: MIT
/**
 * @file majorant.hpp
 * @brief Scalar majorizing equation x̂(t) = ∫₀ᵗ m(s) γ(x̂(s)) ds.
 *
 * The majorant satisfies Φ(x̂(t)) = M(t) with Φ(x) = ∫₀ˣ du/γ(u) and
 * M(t) = ∫₀ᵗ m.  If Φ is unbounded the majorant exists on [0, ∞); if
 * Φ(∞) = l < ∞ it blows up at the T₁ with M(T₁) = l.
 */
#pragma once

#include "veq/expr.hpp"
#include "veq/quadrature.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace veq {

/// Where the positivity / monotonicity falsification samples are taken.
struct SamplingRange {
    double upper = 10.0;
    int samples = 256;
};

/// A pair (m, γ) of condition-B bounding functions.
///
/// Construction rejects γ(0) <= 0 and any sampled point where m or γ is not
/// positive or decreases.  For polynomial γ the tail ∫₀^∞ du/γ is settled
/// exactly by degree (diverges for degree <= 1) and l is computed through
/// the substitution u -> 1/u; otherwise improper_tail() decides.
class MajorantProblem {
public:
    /// `m` may use either `s` or `t` as its variable; `gamma` uses `x`.
    MajorantProblem(Expr m, Expr gamma, QuadratureConfig cfg = {}, SamplingRange range = {});

    const Expr& m() const noexcept { return m_; }
    const Expr& gamma() const noexcept { return gamma_; }
    const QuadratureConfig& quadrature() const noexcept { return cfg_; }

    double m_at(double s) const { return (*m_fn_)(s); }
    double gamma_at(double x) const { return (*gamma_fn_)(x); }

    /// M(t) = ∫₀ᵗ m.
    double integrated_m(double t) const;

    /// Verdict on l = ∫₀^∞ du/γ(u), fixed at construction.
    const TailVerdict& phi_limit() const noexcept { return limit_; }

    /// Polynomial coefficients of γ when it is one.
    const std::optional<std::vector<double>>& gamma_polynomial() const noexcept { return gamma_poly_; }

private:
    Expr m_;
    Expr gamma_;
    QuadratureConfig cfg_;
    std::shared_ptr<const CompiledExpr> m_fn_;
    std::shared_ptr<const CompiledExpr> gamma_fn_;
    std::optional<std::vector<double>> gamma_poly_;
    TailVerdict limit_{TailVerdict::Kind::Inconclusive, 0.0};
};

struct Global {
    std::string note;
};
struct BlowupAt {
    double t1;
    double l;
};
struct Unknown {
    double partial_l;
};

using BlowupClassification = std::variant<Global, BlowupAt, Unknown>;

std::string describe(const BlowupClassification& c);

/// Φ(x) = ∫₀ˣ du/γ(u), x >= 0.
double phi(const MajorantProblem& p, double x);

/// Φ⁻¹(y) by doubling bracket and bisection-guarded Newton (Φ' = 1/γ).
/// Throws OutOfDomainError for y < 0 or y >= l.
double invert_phi(const MajorantProblem& p, double y);

/// Global when ∫₀^∞ du/γ diverges (or when M stays below l), otherwise
/// BlowupAt with M(T₁) = l; Unknown when the tail test is inconclusive.
BlowupClassification classify(const MajorantProblem& p);

/// Evaluator t ↦ x̂(t) = Φ⁻¹(M(t)) on its interval of existence.
class MajorantSolution {
public:
    MajorantSolution(MajorantProblem problem, BlowupClassification classification);

    const MajorantProblem& problem() const noexcept { return problem_; }
    const BlowupClassification& classification() const noexcept { return classification_; }

    /// Right end of the existence interval: T₁, or +inf for Global.
    double valid_until() const noexcept { return valid_until_; }

    /// Throws OutOfDomainError for t < 0 or t > T₁(1 - 1e-12).
    double operator()(double t) const;

private:
    MajorantProblem problem_;
    BlowupClassification classification_;
    double valid_until_;
};

/// Classify and wrap.  Throws ValidationError when the verdict is Unknown.
MajorantSolution majorant_solution(const MajorantProblem& p);

/// Iterates x̂ₙ(t) = ∫₀ᵗ m(s) γ(x̂ₙ₋₁(s)) ds, x̂₀ = 0, n = 1..n_iters, on
/// `grid` (ascending from 0).  Each grid panel is split into 8 equal
/// sub-panels; on each, m is integrated against the linear interpolant of
/// γ(x̂ₙ₋₁), so x̂₁ = γ(0)·M(t) to quadrature accuracy.
std::vector<std::vector<double>> majorant_picard(const MajorantProblem& p,
                                                 std::span<const double> grid, int n_iters);

/// Fixed-slope iteration xₙ = xₙ₋₁ - γ(0)[Φ(xₙ₋₁) - M(t)], x₀ = 0.
/// Throws ConvergenceError when |Φ(x) - M(t)| > tol after n_max steps.
double chord_iteration(const MajorantProblem& p, double t, int n_max = 1000, double tol = 1e-12);

}  // namespace veq
