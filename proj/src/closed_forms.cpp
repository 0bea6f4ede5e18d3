// SPDX-License-Identifier: MIT
#include "veq/closed_forms.hpp"

#include "veq/error.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>

namespace veq {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::function<double(double)> univariate(const Expr& m) {
    auto fn = std::make_shared<const CompiledExpr>(compile_univariate(m));
    return [fn](double s) { return (*fn)(s); };
}

}  // namespace

LinearGamma::LinearGamma(double a_, double b_) : a(a_), b(b_) {
    if (!(a >= 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw ValidationError("linear gamma needs a >= 0 and b > 0");
    }
}

double linear_majorant(const LinearGamma& g, const Expr& m, double t, const QuadratureConfig& cfg) {
    if (!(t >= 0.0)) throw OutOfDomainError("linear majorant requires t >= 0", 0.0);
    if (g.a == 0.0 || t == 0.0) return 0.0;
    const auto m_fn = univariate(m);
    const Integrand outer = [&](double z) {
        const double inner = integrate(m_fn, z, t, cfg);
        return m_fn(z) * std::exp(g.b * inner);
    };
    return g.a * integrate(outer, 0.0, t, cfg);
}

QuadraticGamma::QuadraticGamma(double a, double b, double c) : a_(a), b_(b), c_(c) {
    if (!(a > 0.0) || !(b > 0.0) || !(c >= 0.0)) {
        throw ValidationError("quadratic gamma needs a > 0, b > 0, c >= 0");
    }
    if (!(discriminant() > 0.0)) {
        throw ValidationError("quadratic gamma needs 4ac - b^2 > 0; got " + fmt(discriminant()));
    }
}

double quadratic_blowup_rhs(const QuadraticGamma& g) {
    const double root = std::sqrt(g.discriminant());
    return 2.0 / root * (std::numbers::pi / 2.0 - std::atan(g.b() / root));
}

std::optional<double> quadratic_blowup_time(const QuadraticGamma& g, const Expr& m,
                                            const QuadratureConfig& cfg) {
    return solve_upper_limit(univariate(m), quadratic_blowup_rhs(g), cfg);
}

QuadraticMajorant::QuadraticMajorant(QuadraticGamma g, Expr m, QuadratureConfig cfg)
    : g_(g), m_(std::move(m)), cfg_(cfg), m_fn_(univariate(m_)) {
    const double root = std::sqrt(g_.discriminant());
    prefactor_ = root / (2.0 * g_.a());
    phase_ = std::atan(g_.b() / root);
    rate_ = root / 2.0;
    shift_ = g_.b() / (2.0 * g_.a());
    l_ = quadratic_blowup_rhs(g_);
}

double QuadraticMajorant::integrated_m(double t) const {
    return integrate(m_fn_, 0.0, t, cfg_);
}

double QuadraticMajorant::operator()(double t) const {
    if (!(t >= 0.0)) throw OutOfDomainError("quadratic majorant requires t >= 0", 0.0);
    if (t == 0.0) return 0.0;
    const double big_m = integrated_m(t);
    if (big_m >= l_) {
        throw OutOfDomainError("t = " + fmt(t) + " is at or past the blow-up time (M(t) = " +
                                   fmt(big_m) + " >= l = " + fmt(l_) + ")",
                               l_);
    }
    return prefactor_ * std::tan(phase_ + rate_ * big_m) - shift_;
}

double quadratic_majorant(const QuadraticGamma& g, const Expr& m, double t, const QuadratureConfig& cfg) {
    return QuadraticMajorant(g, m, cfg)(t);
}

ParametricInterval parametric_interval(const ParametricCoeffs& p, double lambda_norm) {
    if (!(lambda_norm > 0.0) || !(lambda_norm < p.delta)) {
        throw OutOfDomainError("need 0 < |lambda| < delta = " + fmt(p.delta) + "; got " + fmt(lambda_norm),
                               p.delta);
    }
    if (!(p.sigma < std::numbers::pi / 2.0)) throw ValidationError("sigma must be below pi/2");
    QuadraticGamma g(p.a(lambda_norm), p.b(lambda_norm), p.c(lambda_norm));
    const double length = 2.0 / std::sqrt(g.discriminant()) * (std::numbers::pi / 2.0 - p.sigma);
    QuadraticMajorant maj(g, Expr::number(1.0));
    return ParametricInterval{length, g, std::move(maj)};
}

double estimate_sigma(const std::function<double(double)>& a, const std::function<double(double)>& b,
                      const std::function<double(double)>& c, double delta, int samples) {
    if (!(delta > 0.0) || samples < 1) throw ValidationError("estimate_sigma needs delta > 0");
    double sigma = -std::numbers::pi / 2.0;
    for (int i = 1; i <= samples; ++i) {
        const double lam = delta * i / (samples + 1);
        const double disc = 4.0 * a(lam) * c(lam) - b(lam) * b(lam);
        if (!(disc > 0.0)) {
            throw ValidationError("4ac - b^2 must be positive; fails at |lambda| = " + fmt(lam));
        }
        sigma = std::max(sigma, std::atan(b(lam) / std::sqrt(disc)));
    }
    return sigma;
}

}  // namespace veq
