// SPDX-License-Identifier: MIT
#include "veq/quadrature.hpp"

#include "veq/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace veq {

namespace {

constexpr int kInitialPanels = 8;
constexpr long kEvaluationBudget = 20'000'000;

struct AdaptState {
    const Integrand& f;
    long evaluations = 0;
    bool exhausted = false;
    double exhausted_at = 0.0;

    double sample(double x) {
        ++evaluations;
        const double v = f(x);
        if (!std::isfinite(v)) {
            throw QuadratureError("non-finite integrand value at x = " + std::to_string(x),
                                  std::numeric_limits<double>::quiet_NaN(), x);
        }
        return v;
    }
};

double adapt(AdaptState& st, double a, double fa, double m, double fm, double b, double fb,
             double whole, double eps, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    if (!(a < lm && lm < m && m < rm && rm < b)) return whole;
    const double flm = st.sample(lm);
    const double frm = st.sample(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0 || st.evaluations > kEvaluationBudget) {
        if (!st.exhausted) st.exhausted_at = m;
        st.exhausted = true;
        return left + right + delta / 15.0;
    }
    return adapt(st, a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1) +
           adapt(st, m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace

void QuadratureConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw ValidationError("quadrature tolerances must be positive");
    }
    if (max_depth < 1) throw ValidationError("quadrature max_depth must be at least 1");
}

double integrate(const Integrand& f, double a, double b, const QuadratureConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(a) || !std::isfinite(b) || a > b) {
        throw ValidationError("integration bounds must be finite with a <= b");
    }
    if (a == b) return 0.0;

    AdaptState st{f};
    constexpr int n = 2 * kInitialPanels;
    const double h = (b - a) / n;
    double xs[n + 1];
    double fs[n + 1];
    for (int i = 0; i <= n; ++i) {
        xs[i] = i == n ? b : a + i * h;
        fs[i] = st.sample(xs[i]);
    }
    double wholes[kInitialPanels];
    double coarse = 0.0;
    for (int p = 0; p < kInitialPanels; ++p) {
        const int i = 2 * p;
        wholes[p] = (xs[i + 2] - xs[i]) / 6.0 * (fs[i] + 4.0 * fs[i + 1] + fs[i + 2]);
        coarse += wholes[p];
    }
    const double eps = std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(coarse)) / kInitialPanels;

    double total = 0.0;
    for (int p = 0; p < kInitialPanels; ++p) {
        const int i = 2 * p;
        total += adapt(st, xs[i], fs[i], xs[i + 1], fs[i + 1], xs[i + 2], fs[i + 2], wholes[p],
                       eps, cfg.max_depth);
    }
    if (st.exhausted) {
        throw QuadratureError("adaptive quadrature exhausted its refinement budget near x = " +
                                  std::to_string(st.exhausted_at),
                              total, st.exhausted_at);
    }
    return total;
}

std::vector<double> cumulative(const Integrand& f, std::span<const double> grid,
                               const QuadratureConfig& cfg) {
    if (grid.empty() || grid[0] != 0.0) {
        throw ValidationError("cumulative integration grid must start at 0");
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] >= grid[i - 1])) throw ValidationError("cumulative integration grid must ascend");
        out[i] = out[i - 1] + integrate(f, grid[i - 1], grid[i], cfg);
    }
    return out;
}

TailVerdict improper_tail(const Integrand& f, const QuadratureConfig& cfg, const TailOptions& opts) {
    constexpr double kDecayRatio = 0.9;
    constexpr int kFlatRun = 4;
    double sum = 0.0;
    try {
        double previous = integrate(f, 0.0, 1.0, cfg);
        sum = previous;
        int non_decreasing = 0;
        double lo = 1.0;
        for (int k = 1; k <= opts.cutoff_doublings; ++k) {
            const double hi = 2.0 * lo;
            const double increment = integrate(f, lo, hi, cfg);
            sum += increment;
            if (sum > opts.divergence_cap) return TailVerdict::diverges(sum);
            if (increment < opts.tail_eps &&
                (increment < kDecayRatio * previous || increment == 0.0)) {
                return TailVerdict::converges(sum);
            }
            non_decreasing = increment >= previous * (1.0 - 1e-6) ? non_decreasing + 1 : 0;
            previous = increment;
            lo = hi;
        }
        if (non_decreasing >= kFlatRun) return TailVerdict::diverges(sum);
    } catch (const Error&) {
        return TailVerdict::inconclusive(sum);
    }
    return TailVerdict::inconclusive(sum);
}

std::optional<double> solve_upper_limit(const Integrand& f, double target,
                                        const QuadratureConfig& cfg, double upper_cap) {
    if (!(target > 0.0)) return 0.0;
    double lo = 0.0;
    double acc_lo = 0.0;
    double hi = 1.0;
    double acc_hi = integrate(f, 0.0, hi, cfg);
    while (acc_hi < target) {
        if (hi >= upper_cap) return std::nullopt;
        lo = hi;
        acc_lo = acc_hi;
        hi *= 2.0;
        acc_hi = acc_lo + integrate(f, lo, hi, cfg);
    }
    // Bracket [lo, hi] with acc_lo < target <= acc_hi.
    constexpr double kValueTol = 1e-10;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        const double acc_mid = acc_lo + integrate(f, lo, mid, cfg);
        if (acc_mid < target) {
            lo = mid;
            acc_lo = acc_mid;
        } else {
            hi = mid;
            acc_hi = acc_mid;
        }
        const double width_tol = 1e-12 * std::max(1.0, hi);
        if (hi - lo <= width_tol && std::fabs(acc_hi - target) <= kValueTol &&
            std::fabs(acc_lo - target) <= kValueTol) {
            break;
        }
    }
    // Linear interpolation inside the final bracket.
    const double span = acc_hi - acc_lo;
    if (span > 0.0) return lo + (hi - lo) * (target - acc_lo) / span;
    return 0.5 * (lo + hi);
}

}  // namespace veq
