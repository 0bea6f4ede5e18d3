// SPDX-License-Identifier: MIT
#include "veq/algebraic.hpp"

#include "veq/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace veq {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void require_vars(const Expr& e, std::initializer_list<const char*> allowed, const char* what) {
    for (const auto& v : e.variables()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return v == a; })) {
            throw ValidationError(std::string(what) + " may not depend on '" + v + "'");
        }
    }
}

std::shared_ptr<const CompiledExpr> compile(const Expr& e, std::vector<std::string> slots) {
    return std::make_shared<const CompiledExpr>(e, std::move(slots));
}

struct Residual {
    double fixed_point;  // M - r
    double tangency;     // M_r - 1
    double norm() const { return std::hypot(fixed_point, tangency); }
};

bool evaluate_residual(const AlgebraicMajorant& am, double r, double rho, Residual& out) {
    try {
        out = {am.value(r, rho) - r, am.d_r(r, rho) - 1.0};
    } catch (const Error&) {
        return false;
    }
    return std::isfinite(out.fixed_point) && std::isfinite(out.tangency);
}

bool inside(const AlgebraicBox& box, double r, double rho) {
    return r > 0.0 && rho > 0.0 && r <= box.r_max && rho <= box.rho_max;
}

// Damped Newton on F(r, ρ) = (M - r, M_r - 1).  Returns true and updates
// (r, rho) when both residuals reach tol inside the box.
bool newton_2d(const AlgebraicMajorant& am, double& r, double& rho, double tol, const AlgebraicBox& box) {
    Residual f;
    if (!evaluate_residual(am, r, rho, f)) return false;
    for (int iter = 0; iter < 100; ++iter) {
        if (std::fabs(f.fixed_point) <= tol && std::fabs(f.tangency) <= tol) return true;
        double j11, j12, j21, j22;
        try {
            j11 = am.d_r(r, rho) - 1.0;
            j12 = am.d_rho(r, rho);
            j21 = am.d_rr(r, rho);
            j22 = am.d_r_rho(r, rho);
        } catch (const Error&) {
            return false;
        }
        const double det = j11 * j22 - j12 * j21;
        if (!std::isfinite(det) || det == 0.0) return false;
        const double dr = -(j22 * f.fixed_point - j12 * f.tangency) / det;
        const double drho = -(-j21 * f.fixed_point + j11 * f.tangency) / det;
        double step = 1.0;
        bool moved = false;
        for (int k = 0; k < 40; ++k, step *= 0.5) {
            const double r_new = r + step * dr;
            const double rho_new = rho + step * drho;
            Residual f_new;
            if (inside(box, r_new, rho_new) && evaluate_residual(am, r_new, rho_new, f_new) &&
                f_new.norm() < f.norm()) {
                r = r_new;
                rho = rho_new;
                f = f_new;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return std::fabs(f.fixed_point) <= tol && std::fabs(f.tangency) <= tol;
}

TangencyPoint make_point(const AlgebraicMajorant& am, double r, double rho) {
    return {r, rho, std::fabs(r - am.value(r, rho)), std::fabs(1.0 - am.d_r(r, rho))};
}

}  // namespace

AlgebraicMajorant::AlgebraicMajorant(Expr expr, Expr expr_r, Functions fns, AlgebraicSampling sampling)
    : expr_(std::move(expr)), expr_r_(std::move(expr_r)),
      fns_(std::make_shared<const Functions>(std::move(fns))) {
    validate(sampling);
}

AlgebraicMajorant::AlgebraicMajorant(Expr m, AlgebraicSampling sampling) {
    require_vars(m, {"r", "rho"}, "M(rho, r)");
    Expr m_r = differentiate(m, "r");
    const std::vector<std::string> slots{"r", "rho"};
    auto value = compile(m, slots);
    auto d_r = compile(m_r, slots);
    auto d_rr = compile(differentiate(m_r, "r"), slots);
    auto d_rho = compile(differentiate(m, "rho"), slots);
    auto d_r_rho = compile(differentiate(m_r, "rho"), slots);
    Functions fns{
        [value](double r, double rho) { return (*value)(r, rho); },
        [d_r](double r, double rho) { return (*d_r)(r, rho); },
        [d_rr](double r, double rho) { return (*d_rr)(r, rho); },
        [d_rho](double r, double rho) { return (*d_rho)(r, rho); },
        [d_r_rho](double r, double rho) { return (*d_r_rho)(r, rho); },
    };
    *this = AlgebraicMajorant(std::move(m), std::move(m_r), std::move(fns), sampling);
}

AlgebraicMajorant AlgebraicMajorant::from_integrand(Expr integrand, QuadratureConfig cfg,
                                                    AlgebraicSampling sampling) {
    require_vars(integrand, {"rho", "s", "r"}, "M(rho, s, r)");
    Expr f_r = differentiate(integrand, "r");
    const std::vector<std::string> slots{"rho", "s", "r"};
    auto f = compile(integrand, slots);
    auto fr = compile(f_r, slots);
    auto frr = compile(differentiate(f_r, "r"), slots);
    auto frho = compile(differentiate(integrand, "rho"), slots);
    auto frrho = compile(differentiate(f_r, "rho"), slots);
    auto over_s = [cfg](std::shared_ptr<const CompiledExpr> g) {
        return [g, cfg](double r, double rho) {
            return integrate([&](double s) { return (*g)(rho, s, r); }, 0.0, rho, cfg);
        };
    };
    auto value = over_s(f);
    auto d_r = over_s(fr);
    auto d_rr = over_s(frr);
    auto rho_part = over_s(frho);
    auto r_rho_part = over_s(frrho);
    Functions fns{
        value,
        d_r,
        d_rr,
        [f, rho_part](double r, double rho) { return (*f)(rho, rho, r) + rho_part(r, rho); },
        [fr, r_rho_part](double r, double rho) { return (*fr)(rho, rho, r) + r_rho_part(r, rho); },
    };
    return AlgebraicMajorant(std::move(integrand), std::move(f_r), std::move(fns), sampling);
}

void AlgebraicMajorant::validate(const AlgebraicSampling& sampling) const {
    const int n = std::max(sampling.samples, 3);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double rho = sampling.rho_upper * (j + 1) / n;
        for (int i = 0; i < n; ++i) {
            const double r = sampling.r_upper * i / (n - 1);
            double v = 0.0;
            try {
                v = value(r, rho);
            } catch (const Error& e) {
                throw ValidationError("M is undefined at (r, rho) = (" + fmt(r) + ", " + fmt(rho) +
                                      "): " + e.what());
            }
            if (!std::isfinite(v) || v <= 0.0) {
                throw ValidationError(
                    "M must be positive for rho > 0 (M(rho, 0) > 0 excludes the trivial-only case); "
                    "value " + fmt(v) + " at (r, rho) = (" + fmt(r) + ", " + fmt(rho) + ")");
            }
            row[static_cast<std::size_t>(i)] = v;
        }
        for (int i = 1; i < n; ++i) {
            const double prev = row[static_cast<std::size_t>(i - 1)];
            const double cur = row[static_cast<std::size_t>(i)];
            if (cur < prev * (1.0 - 1e-12)) {
                throw ValidationError("M must be increasing in r; fails near rho = " + fmt(rho));
            }
            if (i + 1 < n) {
                const double next = row[static_cast<std::size_t>(i + 1)];
                if (next - 2.0 * cur + prev < -1e-9 * std::max({1.0, prev, next})) {
                    throw ValidationError("M must be convex in r; fails near (r, rho) = (" +
                                          fmt(sampling.r_upper * i / (n - 1)) + ", " + fmt(rho) + ")");
                }
            }
        }
    }
}

PicardOutcome algebraic_picard(const AlgebraicMajorant& am, double rho, const AlgebraicPicardOptions& opts) {
    if (!(rho >= 0.0)) throw OutOfDomainError("algebraic iteration requires rho >= 0", 0.0);
    double r = 0.0;
    for (int n = 1; n <= opts.n_max; ++n) {
        const double next = am.value(r, rho);
        if (!std::isfinite(next) || next > opts.divergence_cap) return {next, n, false};
        if (std::fabs(next - r) <= opts.tol) return {next, n, true};
        r = next;
    }
    return {r, opts.n_max, false};
}

TangencyPoint solve_tangency(const AlgebraicMajorant& am, double tol, AlgebraicBox box) {
    // Newton from the best points of a logarithmic grid.
    struct Start {
        double norm, r, rho;
    };
    std::vector<Start> starts;
    constexpr int kGrid = 13;
    for (int i = 0; i < kGrid; ++i) {
        for (int j = 0; j < kGrid; ++j) {
            const double r = 1e-3 * std::pow(box.r_max / 1e-3, i / (kGrid - 1.0));
            const double rho = 1e-3 * std::pow(box.rho_max / 1e-3, j / (kGrid - 1.0));
            Residual f;
            if (evaluate_residual(am, r, rho, f)) starts.push_back({f.norm(), r, rho});
        }
    }
    std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.norm < b.norm; });
    const std::size_t tries = std::min<std::size_t>(starts.size(), 12);
    for (std::size_t k = 0; k < tries; ++k) {
        double r = starts[k].r;
        double rho = starts[k].rho;
        if (newton_2d(am, r, rho, tol, box)) return make_point(am, r, rho);
    }

    // Fallback: the iteration converges exactly for rho <= rho*.
    AlgebraicPicardOptions opts;
    opts.n_max = 20000;
    auto converges = [&](double rho) { return algebraic_picard(am, rho, opts).converged; };
    double rho_lo = 0.0;
    double rho_hi = 1e-3;
    while (converges(rho_hi)) {
        rho_lo = rho_hi;
        rho_hi *= 2.0;
        if (rho_hi > box.rho_max) {
            throw ConvergenceError("tangency search left the box: iteration still converges at rho = " +
                                       fmt(rho_lo) + " (rho_max = " + fmt(box.rho_max) + ")",
                                   0, rho_lo);
        }
    }
    for (int iter = 0; iter < 80 && rho_hi - rho_lo > 1e-12 * std::max(1.0, rho_hi); ++iter) {
        const double mid = 0.5 * (rho_lo + rho_hi);
        (converges(mid) ? rho_lo : rho_hi) = mid;
    }
    double r = algebraic_picard(am, rho_lo, opts).value;
    for (int iter = 0; iter < 100; ++iter) {
        const double g = am.d_r(r, rho_lo) - 1.0;
        const double dg = am.d_rr(r, rho_lo);
        if (!(dg > 0.0)) break;
        const double next = std::max(0.5 * r, r - g / dg);
        if (std::fabs(next - r) <= 1e-15 * std::max(1.0, r)) {
            r = next;
            break;
        }
        r = next;
    }
    double rho = rho_lo;
    if (newton_2d(am, r, rho, tol, box)) return make_point(am, r, rho);
    const TangencyPoint best = make_point(am, r, rho);
    throw ConvergenceError("no tangency point with residuals <= " + fmt(tol) + "; rho bracket [" +
                               fmt(rho_lo) + ", " + fmt(rho_hi) + "], last residuals (" +
                               fmt(best.fixed_point_residual) + ", " + fmt(best.tangency_residual) + ")",
                           0, rho_lo);
}

ExistenceCertificate existence_certificate(const AlgebraicMajorant& am, const TangencyPoint& tp, double rho) {
    if (!(rho >= 0.0)) throw OutOfDomainError("rho must be non-negative", tp.rho_star);
    if (rho > tp.rho_star * (1.0 + 1e-12)) {
        throw OutOfDomainError("no existence guarantee beyond rho* = " + fmt(tp.rho_star) +
                                   "; requested rho = " + fmt(rho),
                               tp.rho_star);
    }
    if (rho >= tp.rho_star * (1.0 - 1e-9)) return {rho, tp.rho_star, tp.r_star, tp.r_star};
    const auto outcome = algebraic_picard(am, rho);
    if (!outcome.converged) {
        throw ConvergenceError("iteration r = M(r, rho) did not settle at rho = " + fmt(rho),
                               outcome.iterations, outcome.value);
    }
    return {rho, tp.rho_star, outcome.value, tp.r_star};
}

}  // namespace veq
