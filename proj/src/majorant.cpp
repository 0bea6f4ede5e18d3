// SPDX-License-Identifier: MIT
#include "veq/majorant.hpp"

#include "veq/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace veq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string single_variable_of_m(const Expr& m) {
    const auto vars = m.variables();
    for (const auto& v : vars) {
        if (v != "s" && v != "t") {
            throw ValidationError("m may only depend on s (or t), found '" + v + "'");
        }
    }
    if (vars.size() > 1) throw ValidationError("m must be a function of a single variable");
    return vars.empty() ? "s" : *vars.begin();
}

// Checks f > 0 and non-decreasing at `samples` points of [lo, hi].
void check_positive_increasing(const CompiledExpr& f, const char* name, double lo, double hi,
                               int samples) {
    double previous = -kInf;
    for (int i = 0; i < samples; ++i) {
        const double x = samples == 1 ? hi : lo + (hi - lo) * i / (samples - 1);
        double v = 0.0;
        try {
            v = f(x);
        } catch (const DomainError& e) {
            throw ValidationError(std::string(name) + " is undefined at " + fmt(x) + ": " + e.what());
        }
        if (!std::isfinite(v) || v <= 0.0) {
            throw ValidationError(std::string(name) + " must be positive; value " + fmt(v) +
                                  " at " + fmt(x));
        }
        if (v < previous - 1e-12 * std::fabs(previous)) {
            throw ValidationError(std::string(name) + " must be non-decreasing; it drops to " +
                                  fmt(v) + " at " + fmt(x));
        }
        previous = v;
    }
}

// ∫₁^∞ du/γ(u) = ∫₀¹ u^{n-2} / rev(u) du with rev(u) = uⁿγ(1/u).
double polynomial_tail_beyond_one(const std::vector<double>& c, const QuadratureConfig& cfg) {
    const int n = static_cast<int>(c.size()) - 1;
    auto reversed = [&](double u) {
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) acc = acc * u + c[static_cast<std::size_t>(k)];
        return acc;
    };
    for (int i = 0; i <= 256; ++i) {
        if (!(reversed(i / 256.0) > 0.0)) {
            throw ValidationError("gamma must stay positive on [0, inf); it vanishes near x = " +
                                  fmt(256.0 / i));
        }
    }
    return integrate([&](double u) { return std::pow(u, n - 2) / reversed(u); }, 0.0, 1.0, cfg);
}

}  // namespace

MajorantProblem::MajorantProblem(Expr m, Expr gamma, QuadratureConfig cfg, SamplingRange range)
    : m_(std::move(m)), gamma_(std::move(gamma)), cfg_(cfg) {
    cfg_.validate();
    for (const auto& v : gamma_.variables()) {
        if (v != "x") throw ValidationError("gamma may only depend on x, found '" + v + "'");
    }
    m_fn_ = std::make_shared<const CompiledExpr>(m_, std::vector<std::string>{single_variable_of_m(m_)});
    gamma_fn_ = std::make_shared<const CompiledExpr>(gamma_, std::vector<std::string>{"x"});

    double g0 = 0.0;
    try {
        g0 = gamma_at(0.0);
    } catch (const DomainError& e) {
        throw ValidationError(std::string("gamma is undefined at 0: ") + e.what());
    }
    if (!(g0 > 0.0)) {
        throw ValidationError("gamma(0) must be positive (gamma(0) = 0 admits only the trivial solution)");
    }
    if (range.samples < 2 || !(range.upper > 0.0)) throw ValidationError("invalid sampling range");
    check_positive_increasing(*gamma_fn_, "gamma", 0.0, range.upper, range.samples);
    check_positive_increasing(*m_fn_, "m", range.upper / range.samples, range.upper, range.samples);

    gamma_poly_ = polynomial_coefficients(gamma_, "x");
    const Integrand inv_gamma = [this](double x) { return 1.0 / gamma_at(x); };
    if (gamma_poly_) {
        const auto& c = *gamma_poly_;
        if (c.size() <= 2) {
            limit_ = TailVerdict::diverges(kInf);
        } else {
            if (!(c.back() > 0.0)) {
                throw ValidationError("gamma has a non-positive leading coefficient and turns negative");
            }
            limit_ = TailVerdict::converges(integrate(inv_gamma, 0.0, 1.0, cfg_) +
                                            polynomial_tail_beyond_one(c, cfg_));
        }
    } else {
        limit_ = improper_tail(inv_gamma, cfg_);
    }
}

double MajorantProblem::integrated_m(double t) const {
    if (!(t >= 0.0)) throw OutOfDomainError("M(t) requires t >= 0", 0.0);
    return integrate([this](double s) { return m_at(s); }, 0.0, t, cfg_);
}

std::string describe(const BlowupClassification& c) {
    if (const auto* b = std::get_if<BlowupAt>(&c)) {
        return "BlowupAt T1=" + fmt(b->t1) + " l=" + fmt(b->l);
    }
    if (const auto* u = std::get_if<Unknown>(&c)) return "Unknown partial_l=" + fmt(u->partial_l);
    const auto& g = std::get<Global>(c);
    return g.note.empty() ? "Global" : "Global (" + g.note + ")";
}

// Inverting Φ multiplies its error by γ(x), so Φ is integrated a thousand
// times tighter than the problem tolerance.
static QuadratureConfig phi_config(const QuadratureConfig& cfg) {
    QuadratureConfig tight = cfg;
    tight.abs_tol = std::max(cfg.abs_tol * 1e-3, 1e-15);
    tight.rel_tol = std::max(cfg.rel_tol * 1e-3, 1e-15);
    return tight;
}

double phi(const MajorantProblem& p, double x) {
    if (!(x >= 0.0)) throw OutOfDomainError("phi(x) requires x >= 0", 0.0);
    return integrate([&p](double u) { return 1.0 / p.gamma_at(u); }, 0.0, x, phi_config(p.quadrature()));
}

double invert_phi(const MajorantProblem& p, double y) {
    if (!(y >= 0.0)) throw OutOfDomainError("inverse of phi requires y >= 0", 0.0);
    const auto& limit = p.phi_limit();
    if (limit.kind == TailVerdict::Kind::Converges && y >= limit.value) {
        throw OutOfDomainError("inverse of phi is defined on [0, l) with l = " + fmt(limit.value) +
                                   "; got y = " + fmt(y),
                               limit.value);
    }
    if (y == 0.0) return 0.0;

    const auto cfg = phi_config(p.quadrature());
    const Integrand inv_gamma = [&p](double u) { return 1.0 / p.gamma_at(u); };

    double lo = 0.0;
    double phi_lo = 0.0;
    double hi = 1.0;
    double phi_hi = integrate(inv_gamma, 0.0, hi, cfg);
    while (phi_hi < y) {
        if (hi > 1e300) {
            throw OutOfDomainError("phi stays below " + fmt(y) + " (l <= " + fmt(phi_hi) + ")", phi_hi);
        }
        lo = hi;
        phi_lo = phi_hi;
        hi *= 2.0;
        phi_hi = phi_lo + integrate(inv_gamma, lo, hi, cfg);
    }

    const double ftol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, y);
    double x = lo + (hi - lo) * (y - phi_lo) / (phi_hi - phi_lo);
    for (int iter = 0; iter < 200; ++iter) {
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double phi_x = (x - lo <= hi - x) ? phi_lo + integrate(inv_gamma, lo, x, cfg)
                                                : phi_hi - integrate(inv_gamma, x, hi, cfg);
        const double residual = phi_x - y;
        if (std::fabs(residual) <= ftol) return x;
        if (residual < 0.0) {
            lo = x;
            phi_lo = phi_x;
        } else {
            hi = x;
            phi_hi = phi_x;
        }
        const double step = residual * p.gamma_at(x);
        if (std::fabs(step) <= 2.0 * std::numeric_limits<double>::epsilon() * x) return x - step;
        x -= step;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) return 0.5 * (lo + hi);
    }
    return x;
}

BlowupClassification classify(const MajorantProblem& p) {
    const auto& limit = p.phi_limit();
    switch (limit.kind) {
        case TailVerdict::Kind::Diverges: return Global{};
        case TailVerdict::Kind::Inconclusive: return Unknown{limit.value};
        case TailVerdict::Kind::Converges: break;
    }
    const double l = limit.value;
    const auto t1 = solve_upper_limit([&p](double s) { return p.m_at(s); }, l, p.quadrature());
    if (!t1) return Global{"M(t) stays below l = " + fmt(l)};
    return BlowupAt{*t1, l};
}

MajorantSolution::MajorantSolution(MajorantProblem problem, BlowupClassification classification)
    : problem_(std::move(problem)), classification_(std::move(classification)) {
    if (const auto* u = std::get_if<Unknown>(&classification_)) {
        throw ValidationError("cannot build a majorant: tail of 1/gamma is inconclusive (partial l = " +
                              fmt(u->partial_l) + ")");
    }
    const auto* b = std::get_if<BlowupAt>(&classification_);
    valid_until_ = b ? b->t1 : kInf;
}

double MajorantSolution::operator()(double t) const {
    if (!(t >= 0.0)) throw OutOfDomainError("majorant requires t >= 0", 0.0);
    if (t > valid_until_ * (1.0 - 1e-12)) {
        throw OutOfDomainError("majorant blows up at T1 = " + fmt(valid_until_) + "; got t = " + fmt(t),
                               valid_until_);
    }
    if (t == 0.0) return 0.0;
    return invert_phi(problem_, problem_.integrated_m(t));
}

MajorantSolution majorant_solution(const MajorantProblem& p) {
    return MajorantSolution(p, classify(p));
}

std::vector<std::vector<double>> majorant_picard(const MajorantProblem& p,
                                                 std::span<const double> grid, int n_iters) {
    if (grid.empty() || grid[0] != 0.0) throw ValidationError("grid must start at 0");
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        if (!(grid[j + 1] > grid[j])) throw ValidationError("grid must be strictly ascending");
    }
    // Iterate on a grid with kSubPanels panels per caller panel, report at the
    // caller's nodes.
    constexpr std::size_t kSubPanels = 8;
    std::vector<double> fine;
    fine.reserve((grid.size() - 1) * kSubPanels + 1);
    fine.push_back(0.0);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double a = grid[j];
        const double h = (grid[j + 1] - a) / kSubPanels;
        for (std::size_t k = 1; k < kSubPanels; ++k) fine.push_back(a + static_cast<double>(k) * h);
        fine.push_back(grid[j + 1]);
    }

    const std::size_t n = fine.size();
    std::vector<double> w_left(n, 0.0);
    std::vector<double> w_right(n, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double a = fine[j];
        const double b = fine[j + 1];
        const double h = b - a;
        w_left[j] = integrate([&](double s) { return p.m_at(s) * (b - s) / h; }, a, b, p.quadrature());
        w_right[j] = integrate([&](double s) { return p.m_at(s) * (s - a) / h; }, a, b, p.quadrature());
    }

    std::vector<std::vector<double>> iterates;
    iterates.reserve(static_cast<std::size_t>(std::max(n_iters, 0)));
    std::vector<double> previous(n, 0.0);
    std::vector<double> next(n, 0.0);
    std::vector<double> g(n);
    for (int it = 0; it < n_iters; ++it) {
        for (std::size_t j = 0; j < n; ++j) g[j] = p.gamma_at(previous[j]);
        next[0] = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            next[j + 1] = next[j] + w_left[j] * g[j] + w_right[j] * g[j + 1];
        }
        std::swap(previous, next);
        std::vector<double> coarse(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) coarse[j] = previous[j * kSubPanels];
        iterates.push_back(std::move(coarse));
    }
    return iterates;
}

double chord_iteration(const MajorantProblem& p, double t, int n_max, double tol) {
    const double target = p.integrated_m(t);
    const auto& limit = p.phi_limit();
    if (limit.kind == TailVerdict::Kind::Converges && target >= limit.value) {
        throw OutOfDomainError("M(t) = " + fmt(target) + " is past l = " + fmt(limit.value),
                               limit.value);
    }
    const double slope = p.gamma_at(0.0);
    double x = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        const double residual = phi(p, x) - target;
        if (std::fabs(residual) <= tol) return x;
        if (n == n_max) break;
        x -= slope * residual;
        if (!std::isfinite(x) || x < 0.0) {
            throw ConvergenceError("chord iteration left the domain of phi at step " +
                                       std::to_string(n + 1) + "; use invert_phi",
                                   n + 1, x);
        }
    }
    throw ConvergenceError("chord iteration did not reach tolerance in " + std::to_string(n_max) +
                               " steps; t is outside the contraction interval, use invert_phi",
                           n_max, x);
}

}  // namespace veq
