// SPDX-License-Identifier: MIT
/**
 * @file algebraic.hpp
 * @brief Algebraic majorants M(ρ, r): the tangency system r = M, 1 = ∂M/∂r
 *        and the scalar iteration rₙ = M(rₙ₋₁, ρ).
 *
 * At the tangency point (r*, ρ*) the line y = r touches y = M(r, ρ*).  For
 * every ρ <= ρ* the iteration from r₀ = 0 increases to the smallest fixed
 * point r(ρ) <= r*, which bounds the sup norm of the main solution on [0, ρ].
 */
#pragma once

#include "veq/expr.hpp"
#include "veq/quadrature.hpp"

#include <functional>
#include <memory>

namespace veq {

struct AlgebraicBox {
    double r_max = 1e3;
    double rho_max = 1e3;
};

/// Falsification grid for positivity / monotonicity / convexity in r.
struct AlgebraicSampling {
    double r_upper = 4.0;
    double rho_upper = 4.0;
    int samples = 16;
};

class AlgebraicMajorant {
public:
    /// `m` is M(ρ, r) over the variables {r, rho}.  Throws ValidationError if
    /// M(ρ, 0) <= 0 somewhere (only the trivial fixed point exists) or if M
    /// fails positivity, monotonicity or convexity in r on the sampling grid.
    explicit AlgebraicMajorant(Expr m, AlgebraicSampling sampling = {});

    /// M(ρ, r) = ∫₀^ρ integrand(ρ, s, r) ds, evaluated by quadrature; the
    /// ρ-derivatives use the Leibniz rule.  `integrand` is over {rho, s, r}.
    static AlgebraicMajorant from_integrand(Expr integrand, QuadratureConfig cfg = {},
                                            AlgebraicSampling sampling = {});

    double value(double r, double rho) const { return fns_->value(r, rho); }
    double d_r(double r, double rho) const { return fns_->d_r(r, rho); }
    double d_rr(double r, double rho) const { return fns_->d_rr(r, rho); }
    double d_rho(double r, double rho) const { return fns_->d_rho(r, rho); }
    double d_r_rho(double r, double rho) const { return fns_->d_r_rho(r, rho); }

    /// The source expression (M itself, or the integrand for from_integrand).
    const Expr& expression() const noexcept { return expr_; }
    /// ∂/∂r of expression().
    const Expr& r_derivative() const noexcept { return expr_r_; }

    struct Functions {
        std::function<double(double, double)> value, d_r, d_rr, d_rho, d_r_rho;
    };

private:
    AlgebraicMajorant(Expr expr, Expr expr_r, Functions fns, AlgebraicSampling sampling);
    void validate(const AlgebraicSampling& sampling) const;

    Expr expr_;
    Expr expr_r_;
    std::shared_ptr<const Functions> fns_;
};

struct PicardOutcome {
    double value;
    int iterations;
    bool converged;
};

struct AlgebraicPicardOptions {
    int n_max = 100000;
    double tol = 1e-12;
    double divergence_cap = 1e9;
};

/// rₙ = M(rₙ₋₁, ρ), r₀ = 0, until |rₙ - rₙ₋₁| <= tol.  converged == false
/// (with the last iterate) when an iterate passes divergence_cap or n_max is
/// reached, which is taken as evidence that ρ > ρ*.
PicardOutcome algebraic_picard(const AlgebraicMajorant& am, double rho,
                               const AlgebraicPicardOptions& opts = {});

struct TangencyPoint {
    double r_star;
    double rho_star;
    double fixed_point_residual;  // |r* - M(r*, ρ*)|
    double tangency_residual;     // |1 - ∂M/∂r(r*, ρ*)|
};

/// Damped Newton on (M - r, ∂M/∂r - 1) from a coarse log grid of starts; on
/// failure, bisection on ρ with algebraic_picard as predicate followed by a
/// Newton solve of ∂M/∂r = 1 and a final Newton polish.  Throws
/// ConvergenceError when no point with both residuals <= tol is found.
TangencyPoint solve_tangency(const AlgebraicMajorant& am, double tol = 1e-10, AlgebraicBox box = {});

struct ExistenceCertificate {
    double rho;
    double rho_star;
    /// Smallest fixed point r(ρ); the guaranteed bound on max|x(t)| over [0, ρ].
    double norm_bound;
    double r_star;
};

/// Throws OutOfDomainError for ρ > ρ* or ρ < 0.
ExistenceCertificate existence_certificate(const AlgebraicMajorant& am, const TangencyPoint& tp,
                                           double rho);

}  // namespace veq
