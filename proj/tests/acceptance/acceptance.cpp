// SPDX-License-Identifier: MIT
// Acceptance run: one [PASS]/[FAIL] line per criterion.
//
// Exit status is 0 when every failing criterion was named with
// --known-failure N; the FAIL line is printed regardless.
#include "support/oracles.hpp"
#include "veq/algebraic.hpp"
#include "veq/cli.hpp"
#include "veq/closed_forms.hpp"
#include "veq/error.hpp"
#include "veq/majorant.hpp"
#include "veq/picard.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace veq;
using veq::testing::make_rng;
using veq::testing::rel_err;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliRun {
    int code;
    nlohmann::json report;
    double seconds;
};

CliRun run_json(const std::string& command, const std::string& file) {
    const std::string path = std::string(VEQ_PROBLEMS_DIR) + "/" + file;
    const char* argv[] = {"veq", "--json", command.c_str(), path.c_str()};
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli(4, argv, out, err);
    const double secs = seconds_since(t0);
    return {code, nlohmann::json::parse(out.str()), secs};
}

double closed_form(double t) {
    return std::sqrt(3.0) / 2.0 * std::tan(std::numbers::pi / 6.0 + std::sqrt(3.0) / 6.0 * t * t * t) - 0.5;
}

Verdict blowup_time() {
    const auto r = run_json("blowup", "worked_example_general.veq");
    if (r.code != 0 || r.report["verdicts"]["classification"] != "BlowupAt") {
        return {false, "blowup exited " + std::to_string(r.code)};
    }
    const double t1 = r.report["verdicts"]["T1"];
    const bool ok = std::fabs(t1 - 1.5365) <= 5e-4 && r.seconds < 1.0;
    return {ok, "T1 = " + fmt("%.10f", t1) + " (target 1.5365 +- 5e-4), " + fmt("%.4f", r.seconds) + " s"};
}

Verdict tangency() {
    const auto r = run_json("tangency", "worked_example.veq");
    if (r.code != 0) return {false, "tangency exited " + std::to_string(r.code)};
    const auto& v = r.report["verdicts"];
    const double rs = v["r_star"], ps = v["rho_star"];
    const double res = std::max(v["fixed_point_residual"].get<double>(), v["tangency_residual"].get<double>());
    const bool ok = std::fabs(rs - 1.0) <= 1e-9 && std::fabs(ps - 1.0) <= 1e-9 && res <= 1e-9 && r.seconds < 1.0;
    return {ok, "(r*, rho*) = (" + fmt("%.12g", rs) + ", " + fmt("%.12g", ps) + "), max residual " +
                    fmt("%.2e", res) + ", " + fmt("%.4f", r.seconds) + " s"};
}

Verdict coefficients() {
    const QuadraticMajorant maj(QuadraticGamma(1.0, 1.0, 1.0), parse("s^2", {"s"}));
    const double cubic = maj.rate() / 3.0;
    const bool ok = std::fabs(maj.prefactor() - 0.8660) <= 5e-4 && std::fabs(maj.phase() - 0.5236) <= 5e-4 &&
                    std::fabs(cubic - 0.28868) <= 5e-4;
    return {ok, "prefactor " + fmt("%.6f", maj.prefactor()) + ", phase " + fmt("%.6f", maj.phase()) +
                    ", cubic " + fmt("%.6f", cubic) + " (also printed as 0.2886)"};
}

Verdict equality_certificate() {
    ProblemSpec spec;
    spec.kernel = parse("(x^2 + x + 1) * s^2", {"t", "s", "x"});
    spec.horizon = 1.3;
    spec.grid_n = 1024;
    const auto traj = picard_solve(spec);
    double sup = 0.0;
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        sup = std::max(sup, std::fabs(traj.values[i] - closed_form(traj.grid[i])));
    }
    const auto maj = majorant_solution(MajorantProblem(parse("s^2", {"s"}), parse("1 + x + x^2", {"x"})));
    const auto cert = certify(traj, maj);
    const bool ok = traj.converged && sup <= 1e-3 && cert.holds;
    std::string detail = "grid 1024: sup error " + fmt("%.3e", sup) + ", certify " +
                         (cert.holds ? "holds" : "does not hold") + " (min slack " + fmt("%.3e", cert.min_slack) +
                         ", tolerance 1e-6)";
    if (!cert.holds) {
        detail += "; trapezoid Picard overshoots the convex exact solution by O(h^2), which needs ~4096 panels";
    }
    return {ok, detail};
}

Verdict ode_oracle() {
    struct Case {
        const char* m;
        const char* gamma;
        std::function<double(double)> mf, gf;
    };
    const std::vector<Case> cases{
        {"1", "1 + x^2", [](double) { return 1.0; }, [](double x) { return 1 + x * x; }},
        {"s^2", "1 + x + x^2", [](double s) { return s * s; }, [](double x) { return 1 + x + x * x; }},
        {"1 + s", "exp(x)", [](double s) { return 1 + s; }, [](double x) { return std::exp(x); }},
        {"exp(s)", "2 + x^3", [](double s) { return std::exp(s); }, [](double x) { return 2 + x * x * x; }},
        {"1 + s^3", "1 + x", [](double s) { return 1 + s * s * s; }, [](double x) { return 1 + x; }},
    };
    double worst = 0.0;
    double tan_err = 0.0;
    for (const auto& c : cases) {
        const auto sol = majorant_solution(MajorantProblem(parse(c.m, {"s"}), parse(c.gamma, {"x"})));
        const double end = std::isinf(sol.valid_until()) ? 3.0 : 0.9 * sol.valid_until();
        std::vector<double> times;
        for (int i = 1; i <= 30; ++i) times.push_back(end * i / 30.0);
        const auto ref = veq::testing::rk4([&](double t, double x) { return c.mf(t) * c.gf(x); }, 0.0, 0.0, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            worst = std::max(worst, rel_err(sol(times[i]), ref[i]));
            if (std::string(c.gamma) == "1 + x^2") {
                tan_err = std::max(tan_err, rel_err(sol(times[i]), std::tan(times[i])));
            }
        }
    }
    const bool ok = worst <= 1e-6 && tan_err <= 1e-6;
    return {ok, "5 pairs, worst relative deviation from RK4 " + fmt("%.2e", worst) + ", from tan t " +
                    fmt("%.2e", tan_err)};
}

Verdict properties() {
    auto rng = make_rng(700);
    std::uniform_real_distribution<double> coef(0.2, 2.0);
    int cases = 0, failures = 0;
    std::string first_failure;
    const auto record = [&](bool ok, const std::string& what) {
        ++cases;
        if (!ok) {
            ++failures;
            if (first_failure.empty()) first_failure = what;
        }
    };
    const auto num = [](double v) { return fmt("%.17g", v); };

    // Φ inversion round trip.
    std::uniform_real_distribution<double> xs(0.0, 10.0);
    for (int k = 0; k < 60; ++k) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        const std::string g = k % 3 == 0   ? num(a) + " + " + num(b) + "*x + " + num(c) + "*x^2"
                              : k % 3 == 1 ? num(a) + " + x^3"
                                           : num(a) + "*exp(" + num(b / 4) + "*x)";
        const MajorantProblem p(parse("1", {"s"}), parse(g, {"x"}));
        const double x = xs(rng);
        const double back = invert_phi(p, phi(p, x));
        record(std::fabs(back - x) <= 1e-8, "round trip " + g + " at " + num(x));
    }

    // Monotone Picard iterates for nonnegative kernels increasing in x.
    for (int k = 0; k < 50; ++k) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        ProblemSpec spec;
        const std::string src = num(a) + " * s * (" + num(b) + " + x + " + num(c) + " * x^2) + t * " +
                                num(a / 2) + " * exp(x)";
        spec.kernel = parse(src, {"t", "s", "x"});
        spec.horizon = 0.3;
        spec.grid_n = 64;
        spec.max_iters = 60;
        std::vector<double> previous;
        bool monotone = true;
        picard_solve(spec, [&](int, std::span<const double> v) {
            if (!previous.empty()) {
                for (std::size_t i = 0; i < v.size(); ++i) monotone = monotone && v[i] >= previous[i];
            }
            previous.assign(v.begin(), v.end());
        });
        record(monotone, "monotone iterates for " + src);
    }

    // Symbolic derivative vs. central differences.
    std::uniform_real_distribution<double> pts(-1.2, 1.2);
    for (int k = 0; k < 60; ++k) {
        const double a = coef(rng), b = coef(rng) / 2;
        const std::string templates[] = {
            num(a) + "*sin(" + num(b) + "*x) + x^3",
            "exp(" + num(b) + "*x) / (1 + x^2)",
            "ln(1 + " + num(a) + "*x^2) * cos(x)",
            "atan(" + num(a) + "*x) * sqrt(1 + " + num(b) + "*x^2)",
            "(" + num(a) + " + x)^3 * tan(" + num(b) + "*x)",
            "abs(x - " + num(a + 2) + ") * x^2",
        };
        const std::string src = templates[k % 6];
        const Expr e = parse(src, {"x"});
        const Expr d = differentiate(e, "x");
        const double x = pts(rng), h = 1e-6;
        const double fd = (evaluate(e, {{"x", x + h}}) - evaluate(e, {{"x", x - h}})) / (2 * h);
        const double exact = evaluate(d, {{"x", x}});
        record(std::fabs(exact - fd) <= 1e-5 * std::max(1.0, std::fabs(exact)), "derivative of " + src);
    }

    // Linear-gamma closed form vs. Φ inversion.
    std::uniform_real_distribution<double> ts(0.05, 2.0);
    for (int k = 0; k < 40; ++k) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        const std::string m = k % 3 == 0   ? num(c) + " + s"
                              : k % 3 == 1 ? num(c) + "*exp(" + num(b / 4) + "*s)"
                                           : num(c) + " + s^2";
        const Expr m_expr = parse(m, {"s"});
        const double t = ts(rng);
        const double direct = linear_majorant(LinearGamma(a, b), m_expr, t);
        const MajorantProblem p(m_expr, parse(num(a) + " + " + num(b) + "*x", {"x"}));
        const double via_phi = majorant_solution(p)(t);
        record(rel_err(direct, via_phi) <= 1e-6, "linear majorant m = " + m);
    }

    const bool ok = failures == 0 && cases >= 200;
    return {ok, std::to_string(cases) + " randomized cases, " + std::to_string(failures) + " failures" +
                    (first_failure.empty() ? "" : " (first: " + first_failure + ")")};
}

Verdict scaling() {
    const auto id = [](double x) { return x; };
    const ParametricCoeffs family{id, id, id, 2.0, std::numbers::pi / 6.0};
    const double target = 2.0 * std::numbers::pi / (3.0 * std::sqrt(3.0));
    double worst = 0.0;
    std::string values;
    for (double lam : {1.0, 0.5, 0.1, 0.01}) {
        const double product = parametric_interval(family, lam).length * lam;
        // Independent route: blow-up time of x' = lam (1 + x + x^2).
        const auto t1 = quadratic_blowup_time(QuadraticGamma(lam, lam, lam), parse("1", {"s"}));
        const double via_phi = std::get<BlowupAt>(classify(MajorantProblem(
                                                      parse("1", {"s"}),
                                                      parse(fmt("%.17g", lam) + " * (1 + x + x^2)", {"x"}))))
                                   .t1;
        worst = std::max({worst, std::fabs(product - target), std::fabs(t1.value_or(0.0) * lam - target),
                          std::fabs(via_phi * lam - target)});
        values += (values.empty() ? "" : ", ") + fmt("%.8f", product);
    }
    return {worst <= 1e-6 && std::fabs(target - 1.20920) <= 1e-5,
            "T*lambda = " + values + "; worst deviation from 2pi/(3 sqrt 3) " + fmt("%.2e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> known;
    app.add_option("--known-failure", known, "criterion numbers whose failure is documented");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {"blow-up time of the worked example", blowup_time},
        {"tangency point of the algebraic majorant", tangency},
        {"closed-form majorant coefficients", coefficients},
        {"equality-case Picard solution and certificate at grid 1024", equality_certificate},
        {"phi inversion vs. RK4 oracle", ode_oracle},
        {"randomized property suites", properties},
        {"T(lambda)*lambda constant for the scaled quadratic family", scaling},
    };
    const std::set<int> allowed(known.begin(), known.end());
    int unexpected = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        Verdict v;
        try {
            v = criteria[i].run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << number << ". " << criteria[i].name << ": " << v.detail;
        if (!v.pass && allowed.count(number)) std::cout << " [known limitation]";
        std::cout << '\n';
        if (!v.pass && !allowed.count(number)) ++unexpected;
    }
    std::cout << "total " << fmt("%.2f", seconds_since(start)) << " s\n";
    return unexpected == 0 ? 0 : 1;
}
