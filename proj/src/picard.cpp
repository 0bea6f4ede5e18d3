// SPDX-License-Identifier: MIT
#include "veq/picard.hpp"

#include "veq/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>

namespace veq {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void ProblemSpec::validate() const {
    for (const auto& v : kernel.variables()) {
        if (v != "t" && v != "s" && v != "x") {
            throw ValidationError("kernel may only depend on t, s, x; found '" + v + "'");
        }
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
    if (grid_n < 16) throw ValidationError("grid_n must be at least 16");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
    if (!(conv_tol > 0.0)) throw ValidationError("conv_tol must be positive");
    if (majorant) {
        const auto classification = classify(*majorant);
        if (const auto* b = std::get_if<BlowupAt>(&classification)) {
            if (!(horizon < b->t1)) {
                throw ValidationError("horizon " + fmt(horizon) + " is not below the majorant blow-up time T1 = " +
                                      fmt(b->t1));
            }
        }
    }
}

Trajectory picard_solve(const ProblemSpec& spec, const IterateObserver& observer) {
    spec.validate();
    const CompiledExpr kernel(spec.kernel, {"t", "s", "x"});
    const bool depends_on_t = spec.kernel.depends_on("t");

    const int n = spec.grid_n;
    const double h = spec.horizon / n;
    Trajectory traj;
    traj.grid.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) traj.grid[static_cast<std::size_t>(i)] = i == n ? spec.horizon : i * h;
    const auto& grid = traj.grid;

    std::vector<double> previous(grid.size(), 0.0);
    std::vector<double> next(grid.size(), 0.0);
    std::vector<double> integrand(grid.size(), 0.0);

    for (int iter = 1; iter <= spec.max_iters; ++iter) {
        next[0] = 0.0;
        if (!depends_on_t) {
            for (std::size_t j = 0; j < grid.size(); ++j) integrand[j] = kernel(0.0, grid[j], previous[j]);
            for (std::size_t i = 1; i < grid.size(); ++i) {
                next[i] = next[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (integrand[i - 1] + integrand[i]);
            }
        } else {
            for (std::size_t i = 1; i < grid.size(); ++i) {
                const double t = grid[i];
                double acc = 0.5 * (kernel(t, grid[0], previous[0]) + kernel(t, grid[i], previous[i]));
                for (std::size_t j = 1; j < i; ++j) acc += kernel(t, grid[j], previous[j]);
                next[i] = h * acc;
            }
        }

        double sup_delta = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!std::isfinite(next[i])) {
                throw ConvergenceError("iterate " + std::to_string(iter) + " is non-finite at t = " +
                                           fmt(grid[i]) + " (suspected blow-up inside the horizon)",
                                       iter, grid[i]);
            }
            sup_delta = std::max(sup_delta, std::fabs(next[i] - previous[i]));
        }
        std::swap(previous, next);
        if (observer) observer(iter, previous);
        traj.iterations_used = iter;
        traj.sup_delta = sup_delta;
        if (sup_delta <= spec.conv_tol) {
            traj.converged = true;
            break;
        }
    }
    traj.values = std::move(previous);
    return traj;
}

CertificateReport certify(const Trajectory& traj, const MajorantSolution& maj, double certify_tol) {
    if (traj.grid.size() != traj.values.size()) throw ValidationError("trajectory grid/value size mismatch");
    CertificateReport report;
    report.rows.reserve(traj.grid.size());
    report.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        const double t = traj.grid[i];
        const double bound = maj(t);
        const double slack = bound - std::fabs(traj.values[i]);
        report.rows.push_back({t, traj.values[i], bound, slack});
        report.min_slack = std::min(report.min_slack, slack);
    }
    report.holds = report.min_slack >= -certify_tol;
    return report;
}

BoundCheckReport bound_check(const ProblemSpec& spec, int samples, std::uint64_t seed) {
    if (!spec.majorant) throw ValidationError("bound check needs a majorant");
    const auto& maj = *spec.majorant;
    const CompiledExpr kernel(spec.kernel, {"t", "s", "x"});
    const CompiledExpr kernel_x(differentiate(spec.kernel, "x"), {"t", "s", "x"});
    const CompiledExpr gamma_x(differentiate(maj.gamma(), "x"), {"x"});

    BoundCheckReport report;
    report.samples = samples;
    report.x_range = 10.0;
    const auto classification = classify(maj);
    const auto* blowup = std::get_if<BlowupAt>(&classification);
    if (std::holds_alternative<Global>(classification) || (blowup && spec.horizon < blowup->t1)) {
        report.x_range = MajorantSolution(maj, classification)(spec.horizon);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto exceeds = [](double lhs, double rhs) { return lhs > rhs * (1.0 + 1e-12) + 1e-14; };
    for (int k = 0; k < samples; ++k) {
        const double t = spec.horizon * unit(rng);
        const double s = t * unit(rng);
        const double x = report.x_range * (2.0 * unit(rng) - 1.0);
        double k_val, k_der, ms, g, dg;
        try {
            k_val = std::fabs(kernel(t, s, x));
            k_der = std::fabs(kernel_x(t, s, x));
            ms = maj.m_at(s);
            g = maj.gamma_at(std::fabs(x));
            dg = gamma_x(std::fabs(x));
        } catch (const DomainError&) {
            ++report.skipped;
            continue;
        }
        const bool value_bad = exceeds(k_val, ms * g);
        const bool der_bad = exceeds(k_der, ms * dg);
        if (value_bad) ++report.value_violations;
        if (der_bad) ++report.derivative_violations;
        if (value_bad && report.examples.size() < 20) {
            report.examples.push_back({BoundViolation::Kind::Value, t, s, x, k_val, ms * g});
        }
        if (der_bad && report.examples.size() < 20) {
            report.examples.push_back({BoundViolation::Kind::Derivative, t, s, x, k_der, ms * dg});
        }
    }
    return report;
}

}  // namespace veq
