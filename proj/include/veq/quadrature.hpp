// SPDX-License-Identifier: MIT
/**
 * @file quadrature.hpp
 * @brief Adaptive Simpson integration, cumulative integrals on grids and
 *        convergence tests for ∫₀^∞ f.
 */
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace veq {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 50;

    /// Throws ValidationError unless tolerances are positive and max_depth >= 1.
    void validate() const;
};

using Integrand = std::function<double(double)>;

/// ∫ₐᵇ f by adaptive Simpson with Richardson correction; the error target is
/// max(abs_tol, rel_tol·|result|).  Throws QuadratureError on depth
/// exhaustion (carrying the best estimate) or on a non-finite sample.
double integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg = {});

/// out[i] = ∫₀^{grid[i]} f, panel by panel.  grid must ascend from 0.
std::vector<double> cumulative(const Integrand& f, std::span<const double> grid,
                               const QuadratureConfig& cfg = {});

/// Outcome of the ∫₀^∞ f test.
struct TailVerdict {
    enum class Kind { Converges, Diverges, Inconclusive };

    Kind kind;
    /// The limit for Converges, the last partial sum otherwise.
    double value;

    static TailVerdict converges(double v) { return {Kind::Converges, v}; }
    static TailVerdict diverges(double partial) { return {Kind::Diverges, partial}; }
    static TailVerdict inconclusive(double partial) { return {Kind::Inconclusive, partial}; }
};

struct TailOptions {
    int cutoff_doublings = 40;
    double tail_eps = 1e-12;
    /// Partial sums above this are declared divergent.
    double divergence_cap = 1e12;
};

/// Integrates f over [0,1] and then [2ᵏ⁻¹, 2ᵏ] for k = 1..cutoff_doublings.
/// Converges once an increment drops below tail_eps while shrinking by a
/// ratio < 0.9; Diverges when the partial sum passes divergence_cap or the
/// final increments stop decreasing.  Never throws.
TailVerdict improper_tail(const Integrand& f, const QuadratureConfig& cfg = {},
                          const TailOptions& opts = {});

/// Smallest T > 0 with ∫₀ᵀ f = target for positive f, by doubling then
/// bisection.  nullopt when ∫₀^{upper_cap} f stays below target.
std::optional<double> solve_upper_limit(const Integrand& f, double target,
                                        const QuadratureConfig& cfg = {},
                                        double upper_cap = 0x1p60);

}  // namespace veq
