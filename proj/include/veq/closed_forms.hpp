// SPDX-License-Identifier: MIT
/**
 * @file closed_forms.hpp
 * @brief Explicit majorants for linear and quadratic γ, and the existence
 *        interval of a quadratic γ whose coefficients depend on ‖λ‖.
 */
#pragma once

#include "veq/expr.hpp"
#include "veq/quadrature.hpp"

#include <functional>
#include <optional>

namespace veq {

/// γ(x) = a + b x with a >= 0, b > 0.
struct LinearGamma {
    double a;
    double b;

    LinearGamma(double a, double b);
};

/// a ∫₀ᵗ m(z) exp(b ∫_z^t m(s) ds) dz by nested quadrature.
double linear_majorant(const LinearGamma& g, const Expr& m, double t, const QuadratureConfig& cfg = {});

/// γ(x) = a x² + b x + c with a > 0, b > 0, c >= 0 and Δ = 4ac - b² > 0.
class QuadraticGamma {
public:
    QuadraticGamma(double a, double b, double c);

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double discriminant() const noexcept { return 4.0 * a_ * c_ - b_ * b_; }

private:
    double a_, b_, c_;
};

/// l = (2/√Δ)(π/2 - arctan(b/√Δ)) = ∫₀^∞ dx/γ(x).
double quadratic_blowup_rhs(const QuadraticGamma& g);

/// T₁ with ∫₀^{T₁} m = l; nullopt if M stays below l.
std::optional<double> quadratic_blowup_time(const QuadraticGamma& g, const Expr& m,
                                            const QuadratureConfig& cfg = {});

/// x̂(t) = prefactor·tan(phase + rate·M(t)) - shift where
/// prefactor = √Δ/(2a), phase = arctan(b/√Δ), rate = √Δ/2, shift = b/(2a).
class QuadraticMajorant {
public:
    QuadraticMajorant(QuadraticGamma g, Expr m, QuadratureConfig cfg = {});

    const QuadraticGamma& gamma() const noexcept { return g_; }
    double prefactor() const noexcept { return prefactor_; }
    double phase() const noexcept { return phase_; }
    double rate() const noexcept { return rate_; }
    double shift() const noexcept { return shift_; }
    double blowup_rhs() const noexcept { return l_; }

    double integrated_m(double t) const;

    /// Throws OutOfDomainError once M(t) reaches l (t >= T₁).
    double operator()(double t) const;

private:
    QuadraticGamma g_;
    Expr m_;
    QuadratureConfig cfg_;
    std::function<double(double)> m_fn_;
    double prefactor_, phase_, rate_, shift_, l_;
};

double quadratic_majorant(const QuadraticGamma& g, const Expr& m, double t,
                          const QuadratureConfig& cfg = {});

/// Coefficients a(‖λ‖), b(‖λ‖), c(‖λ‖) valid on 0 < ‖λ‖ < delta, with
/// sigma = sup arctan(b/√Δ) over that neighbourhood (caller supplied).
struct ParametricCoeffs {
    std::function<double(double)> a;
    std::function<double(double)> b;
    std::function<double(double)> c;
    double delta;
    double sigma;
};

struct ParametricInterval {
    /// T(‖λ‖) = (2/√Δ(‖λ‖))(π/2 - σ).
    double length;
    QuadraticGamma gamma;
    /// Majorant with the coefficients at ‖λ‖ and m ≡ 1.
    QuadraticMajorant majorant;
};

/// Throws OutOfDomainError unless 0 < lambda_norm < delta, ValidationError if
/// the coefficients violate their invariants there or sigma >= π/2.
ParametricInterval parametric_interval(const ParametricCoeffs& p, double lambda_norm);

/// max of arctan(b/√Δ) over `samples` points of (0, delta).
double estimate_sigma(const std::function<double(double)>& a, const std::function<double(double)>& b,
                      const std::function<double(double)>& c, double delta, int samples = 1000);

}  // namespace veq
