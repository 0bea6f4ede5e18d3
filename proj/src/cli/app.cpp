// SPDX-License-Identifier: MIT
#include "veq/cli.hpp"

#include "veq/algebraic.hpp"
#include "veq/closed_forms.hpp"
#include "veq/error.hpp"
#include "veq/majorant.hpp"
#include "veq/picard.hpp"
#include "veq/problem_file.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <memory>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace veq {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
    std::optional<double> quad_tol;
    bool verbose = false;
    bool json = false;
};

/// Exit with a specific code after the report has been filled in.
struct CommandExit {
    int code;
    std::string message;
};

std::string g10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Session {
public:
    Session(std::string command, const Options& opts, std::ostream& out, std::ostream& err)
        : opts_(opts), out_(out), err_(err), start_(std::chrono::steady_clock::now()) {
        report_["command"] = std::move(command);
        report_["inputs"] = Json::object();
        report_["verdicts"] = Json::object();
        report_["outputs"] = Json::array();
    }

    Json& inputs() { return report_["inputs"]; }
    Json& verdicts() { return report_["verdicts"]; }
    Json& root() { return report_; }
    void line(std::string s) { text_.push_back(std::move(s)); }
    void verbose(const std::string& s) {
        if (opts_.verbose) err_ << "[veq] " << s << '\n';
    }

    /// Writes CSV rows to `path` or, when empty, to stdout (the report then
    /// moves to stderr).  Every cell must be finite.
    void write_csv(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows) {
        std::ostringstream buf;
        for (std::size_t i = 0; i < header.size(); ++i) buf << (i ? "," : "") << header[i];
        buf << "\r\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!std::isfinite(row[i])) {
                    throw CommandExit{exit_code::no_convergence, "refusing to write a non-finite CSV value"};
                }
                buf << (i ? "," : "") << g17(row[i]);
            }
            buf << "\r\n";
        }
        if (path.empty()) {
            out_ << buf.str();
            report_to_err_ = true;
            report_["outputs"].push_back("<stdout>");
            return;
        }
        std::ofstream file(path, std::ios::binary);
        if (!file) throw ValidationError("cannot write '" + path + "'");
        file << buf.str();
        if (!file) throw ValidationError("failed writing '" + path + "'");
        report_["outputs"].push_back(path);
    }

    int finish(int code, const std::string& message = {}) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        report_["exit_code"] = code;
        if (!message.empty()) report_["message"] = message;
        report_["wall_time_s"] = wall;
        std::ostream& os = report_to_err_ ? err_ : out_;
        if (opts_.json) {
            os << report_.dump(2) << '\n';
        } else {
            for (const auto& l : text_) os << l << '\n';
            if (!message.empty()) err_ << "veq: " << message << '\n';
        }
        return code;
    }

private:
    const Options& opts_;
    std::ostream& out_;
    std::ostream& err_;
    std::chrono::steady_clock::time_point start_;
    Json report_;
    std::vector<std::string> text_;
    bool report_to_err_ = false;
};

QuadratureConfig quadrature_from(const ProblemFile* file, const Options& opts) {
    QuadratureConfig cfg;
    if (file) {
        if (const auto v = file->number("numerics", "quad_abs_tol")) cfg.abs_tol = *v;
        if (const auto v = file->number("numerics", "quad_rel_tol")) cfg.rel_tol = *v;
    }
    if (opts.quad_tol) {
        cfg.abs_tol = *opts.quad_tol;
        cfg.rel_tol = *opts.quad_tol;
    }
    cfg.validate();
    return cfg;
}

Expr expression(const ProblemFile& file, std::string_view section, std::string_view key,
                const std::set<std::string>& vars) {
    const auto& entry = file.require(section, key);
    try {
        return parse(entry.value, vars);
    } catch (const ParseError& e) {
        std::string vars_list;
        for (const auto& v : vars) vars_list += (vars_list.empty() ? "" : ", ") + v;
        throw ValidationError(file.where(section, key) + ": cannot parse '" + std::string(key) + "': " +
                              e.detail() + (e.expected().empty() ? "" : " (expected " + e.expected() + ")") +
                              "; variables: " + vars_list + "\n    " + entry.value + "\n    " +
                              std::string(e.offset(), ' ') + "^");
    }
}

Expr polynomial_expr(const std::vector<double>& ascending) {
    const Expr x = Expr::variable("x");
    Expr acc = Expr::number(ascending[0]);
    for (std::size_t k = 1; k < ascending.size(); ++k) {
        const Expr term = k == 1 ? x : pow(x, Expr::number(static_cast<double>(k)));
        acc = acc + Expr::number(ascending[k]) * term;
    }
    return acc;
}

struct MajorantSetup {
    Expr m;
    Expr gamma;
    std::optional<QuadraticGamma> quadratic;
    std::optional<LinearGamma> linear;
    QuadratureConfig cfg;

    MajorantProblem problem() const { return MajorantProblem(m, gamma, cfg); }
};

MajorantSetup read_majorant(const ProblemFile& file, const QuadratureConfig& cfg, Json& inputs) {
    if (!file.has_section("majorant")) throw ValidationError(file.origin() + ": missing [majorant] section");
    const int forms = static_cast<int>(file.has("majorant", "gamma")) +
                      static_cast<int>(file.has("majorant", "gamma_quadratic")) +
                      static_cast<int>(file.has("majorant", "gamma_linear"));
    if (forms != 1) {
        throw ValidationError(file.origin() + ": [majorant] needs exactly one of gamma, gamma_quadratic, gamma_linear");
    }
    MajorantSetup setup{expression(file, "majorant", "m", {"s"}), Expr(), std::nullopt, std::nullopt, cfg};
    inputs["m"] = setup.m.to_string();
    if (const auto q = file.numbers("majorant", "gamma_quadratic", 3)) {
        setup.quadratic.emplace((*q)[0], (*q)[1], (*q)[2]);
        setup.gamma = polynomial_expr({(*q)[2], (*q)[1], (*q)[0]});
        inputs["gamma_quadratic"] = *q;
    } else if (const auto l = file.numbers("majorant", "gamma_linear", 2)) {
        setup.linear.emplace((*l)[0], (*l)[1]);
        setup.gamma = polynomial_expr({(*l)[0], (*l)[1]});
        inputs["gamma_linear"] = *l;
    } else {
        setup.gamma = expression(file, "majorant", "gamma", {"x"});
    }
    inputs["gamma"] = setup.gamma.to_string();
    return setup;
}

BlowupClassification classify_setup(const MajorantSetup& setup) {
    if (setup.linear) return Global{"linear gamma: Phi is unbounded"};
    if (setup.quadratic) {
        const double l = quadratic_blowup_rhs(*setup.quadratic);
        const auto t1 = quadratic_blowup_time(*setup.quadratic, setup.m, setup.cfg);
        if (!t1) return Global{"M(t) stays below l = " + g10(l)};
        return BlowupAt{*t1, l};
    }
    return classify(setup.problem());
}

void record_classification(Session& session, const BlowupClassification& c) {
    auto& v = session.verdicts();
    if (const auto* b = std::get_if<BlowupAt>(&c)) {
        v["classification"] = "BlowupAt";
        v["T1"] = b->t1;
        v["l"] = b->l;
    } else if (const auto* u = std::get_if<Unknown>(&c)) {
        v["classification"] = "Unknown";
        v["partial_l"] = u->partial_l;
    } else {
        v["classification"] = "Global";
        const auto& note = std::get<Global>(c).note;
        if (!note.empty()) v["note"] = note;
    }
}

int cmd_blowup(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
    Session session("blowup", opts, out, err);
    session.inputs()["file"] = path;
    const auto file = ProblemFile::load(path);
    const auto setup = read_majorant(file, quadrature_from(&file, opts), session.inputs());
    session.inputs()["method"] = setup.quadratic ? "closed form (quadratic)"
                                 : setup.linear  ? "closed form (linear)"
                                                 : "phi inversion";
    const auto c = classify_setup(setup);
    record_classification(session, c);
    session.line(describe(c));
    if (std::holds_alternative<Unknown>(c)) {
        return session.finish(exit_code::inconclusive, "tail of 1/gamma is inconclusive; no verdict");
    }
    return session.finish(exit_code::ok);
}

int cmd_majorant(const std::string& path, double until, int points, std::optional<double> t_max,
                 const std::string& out_path, const Options& opts, std::ostream& out, std::ostream& err) {
    Session session("majorant", opts, out, err);
    session.inputs()["file"] = path;
    session.inputs()["until"] = until;
    session.inputs()["points"] = points;
    if (!(until > 0.0 && until < 1.0)) throw ValidationError("--until must lie in (0, 1)");
    if (points < 2) throw ValidationError("--points must be at least 2");
    const auto file = ProblemFile::load(path);
    const auto setup = read_majorant(file, quadrature_from(&file, opts), session.inputs());
    const auto c = classify_setup(setup);
    record_classification(session, c);
    if (std::holds_alternative<Unknown>(c)) {
        session.line(describe(c));
        return session.finish(exit_code::inconclusive, "tail of 1/gamma is inconclusive; no majorant");
    }

    double end = 0.0;
    if (const auto* b = std::get_if<BlowupAt>(&c)) {
        end = until * b->t1;
    } else {
        const auto horizon = t_max ? t_max : file.number("problem", "horizon");
        if (!horizon || !(*horizon > 0.0)) {
            throw ValidationError("majorant exists on [0, inf); give --t-max or [problem] horizon");
        }
        end = *horizon;
    }
    session.verdicts()["t_end"] = end;

    std::function<double(double)> eval;
    if (setup.quadratic) {
        auto maj = std::make_shared<QuadraticMajorant>(*setup.quadratic, setup.m, setup.cfg);
        session.verdicts()["prefactor"] = maj->prefactor();
        session.verdicts()["phase"] = maj->phase();
        session.verdicts()["rate"] = maj->rate();
        session.verdicts()["shift"] = maj->shift();
        eval = [maj](double t) { return (*maj)(t); };
    } else if (setup.linear) {
        eval = [&setup](double t) { return linear_majorant(*setup.linear, setup.m, t, setup.cfg); };
    } else {
        auto sol = std::make_shared<MajorantSolution>(setup.problem(), c);
        eval = [sol](double t) { return (*sol)(t); };
    }

    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = i + 1 == points ? end : end * i / (points - 1);
        rows.push_back({t, eval(t)});
    }
    session.write_csv(out_path, {"t", "majorant"}, rows);
    session.line(describe(c));
    session.line("majorant on [0, " + g10(end) + "], " + std::to_string(points) + " points; x_hat(end) = " +
                 g10(rows.back()[1]));
    return session.finish(exit_code::ok);
}

int cmd_solve(const std::string& path, const std::string& out_path, const Options& opts, std::ostream& out,
              std::ostream& err) {
    Session session("solve", opts, out, err);
    session.inputs()["file"] = path;
    const auto file = ProblemFile::load(path);
    const auto cfg = quadrature_from(&file, opts);

    ProblemSpec spec;
    spec.kernel = expression(file, "problem", "kernel", {"t", "s", "x"});
    session.inputs()["kernel"] = spec.kernel.to_string();
    if (const auto v = file.integer("numerics", "grid_n")) spec.grid_n = *v;
    if (const auto v = file.integer("numerics", "max_iters")) spec.max_iters = *v;
    if (const auto v = file.number("numerics", "conv_tol")) spec.conv_tol = *v;
    const double certify_tol = file.number("numerics", "certify_tol").value_or(1e-6);

    std::optional<MajorantSetup> setup;
    std::optional<BlowupClassification> c;
    if (file.has_section("majorant")) {
        setup = read_majorant(file, cfg, session.inputs());
        spec.majorant = setup->problem();
        c = classify(*spec.majorant);
        record_classification(session, *c);
        if (std::holds_alternative<Unknown>(*c)) {
            return session.finish(exit_code::inconclusive, "tail of 1/gamma is inconclusive; no certificate");
        }
    }
    if (const auto h = file.number("problem", "horizon")) {
        spec.horizon = *h;
    } else if (const auto* b = c ? std::get_if<BlowupAt>(&*c) : nullptr) {
        spec.horizon = 0.85 * b->t1;
        session.verbose("horizon defaults to 0.85 T1 = " + g10(spec.horizon));
    } else {
        throw ValidationError(file.origin() + ": [problem] horizon is required unless the majorant blows up");
    }
    session.inputs()["horizon"] = spec.horizon;
    session.inputs()["grid_n"] = spec.grid_n;
    session.inputs()["max_iters"] = spec.max_iters;
    session.inputs()["conv_tol"] = spec.conv_tol;
    spec.validate();

    Trajectory traj;
    try {
        traj = picard_solve(spec, [&](int n, std::span<const double>) {
            if (n % 10 == 0) session.verbose("iteration " + std::to_string(n));
        });
    } catch (const ConvergenceError& e) {
        session.verdicts()["converged"] = false;
        session.verdicts()["failed_iteration"] = e.iterations();
        session.verdicts()["failed_at_t"] = e.last_value();
        session.line(std::string("Picard iteration failed: ") + e.what());
        return session.finish(exit_code::no_convergence, e.what());
    }
    auto& v = session.verdicts();
    v["converged"] = traj.converged;
    v["iterations"] = traj.iterations_used;
    v["sup_delta"] = traj.sup_delta;
    v["x_at_horizon"] = traj.values.back();
    session.line("Picard iteration " + std::string(traj.converged ? "converged" : "did NOT converge") + " after " +
                 std::to_string(traj.iterations_used) + " iterations (last sup update " + g10(traj.sup_delta) +
                 "); x(" + g10(spec.horizon) + ") = " + g10(traj.values.back()));

    int code = traj.converged ? exit_code::ok : exit_code::no_convergence;
    std::string message = traj.converged ? "" : "Picard iteration did not reach conv_tol within max_iters";

    if (!spec.majorant) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < traj.grid.size(); ++i) rows.push_back({traj.grid[i], traj.values[i]});
        session.write_csv(out_path, {"t", "x"}, rows);
        return session.finish(code, message);
    }

    const MajorantSolution maj(*spec.majorant, *c);
    const auto cert = certify(traj, maj, certify_tol);
    const auto bounds = bound_check(spec, 2000);
    std::vector<std::vector<double>> rows;
    for (const auto& r : cert.rows) rows.push_back({r.t, r.x, r.majorant, r.slack});
    session.write_csv(out_path, {"t", "x", "majorant", "slack"}, rows);

    v["certificate_holds"] = cert.holds;
    v["min_slack"] = cert.min_slack;
    v["certify_tol"] = certify_tol;
    v["bound_check"] = {{"samples", bounds.samples},
                        {"x_range", bounds.x_range},
                        {"value_violations", bounds.value_violations},
                        {"derivative_violations", bounds.derivative_violations},
                        {"skipped", bounds.skipped}};
    session.line(describe(*c));
    session.line("certificate |x(t)| <= x_hat(t): " + std::string(cert.holds ? "holds" : "VIOLATED") +
                 " (min slack " + g10(cert.min_slack) + ", tolerance " + g10(certify_tol) + ")");
    session.line("bound check |K| <= m*gamma, |K_x| <= m*gamma' on " + std::to_string(bounds.samples) +
                 " samples: " + std::to_string(bounds.value_violations) + " value / " +
                 std::to_string(bounds.derivative_violations) + " derivative violations");
    if (code == exit_code::ok && !cert.holds) {
        code = exit_code::certificate_violation;
        message = "computed solution exceeds the majorant (min slack " + g10(cert.min_slack) + ")";
    } else if (code == exit_code::ok && !bounds.passed()) {
        code = exit_code::certificate_violation;
        message = "the majorant does not bound the kernel at sampled points";
    }
    return session.finish(code, message);
}

int cmd_tangency(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
    Session session("tangency", opts, out, err);
    session.inputs()["file"] = path;
    const auto file = ProblemFile::load(path);
    if (!file.has_section("algebraic")) throw ValidationError(file.origin() + ": missing [algebraic] section");
    const AlgebraicMajorant am(expression(file, "algebraic", "M", {"r", "rho"}));
    session.inputs()["M"] = am.expression().to_string();

    TangencyPoint tp;
    try {
        tp = solve_tangency(am);
    } catch (const ConvergenceError& e) {
        session.line(std::string("no tangency point: ") + e.what());
        return session.finish(exit_code::inconclusive, e.what());
    }
    auto& v = session.verdicts();
    v["r_star"] = tp.r_star;
    v["rho_star"] = tp.rho_star;
    v["fixed_point_residual"] = tp.fixed_point_residual;
    v["tangency_residual"] = tp.tangency_residual;
    session.line("(r*,rho*)=(" + g10(tp.r_star) + "," + g10(tp.rho_star) + ")");
    session.line("residuals: |r* - M| = " + g10(tp.fixed_point_residual) + ", |1 - M_r| = " +
                 g10(tp.tangency_residual));
    session.line("The main solution exists on [0, " + g10(tp.rho_star) + "] with max |x(t)| <= " + g10(tp.r_star) +
                 " there.");
    if (const auto rho = file.number("algebraic", "rho")) {
        const auto certificate = existence_certificate(am, tp, *rho);
        v["rho"] = certificate.rho;
        v["norm_bound"] = certificate.norm_bound;
        session.line("On [0, " + g10(certificate.rho) + "]: max |x(t)| <= r(rho) = " + g10(certificate.norm_bound));
    }
    return session.finish(exit_code::ok);
}

struct Check {
    std::string name;
    double computed;
    double reference;
    double tolerance;
    std::string note;

    bool passed() const { return std::fabs(computed - reference) <= tolerance; }
};

int cmd_demo_paper(int grid, const Options& opts, std::ostream& out, std::ostream& err) {
    Session session("demo-paper", opts, out, err);
    session.inputs()["kernel"] = "(x^2 + x + 1) * s^2";
    session.inputs()["m"] = "s^2";
    session.inputs()["gamma_quadratic"] = {1.0, 1.0, 1.0};
    session.inputs()["M"] = "rho^3/3 * (1 + r + r^2)";
    session.inputs()["horizon"] = 1.3;
    session.inputs()["grid_n"] = grid;
    const auto cfg = quadrature_from(nullptr, opts);
    std::vector<Check> checks;

    const AlgebraicMajorant am(parse("rho^3/3 * (1 + r + r^2)", {"r", "rho"}));
    const auto tp = solve_tangency(am);
    checks.push_back({"r*", tp.r_star, 1.0, 1e-9, ""});
    checks.push_back({"rho*", tp.rho_star, 1.0, 1e-9, ""});

    const Expr m = parse("s^2", {"s"});
    const QuadraticGamma g(1.0, 1.0, 1.0);
    const auto t1 = quadratic_blowup_time(g, m, cfg);
    if (!t1) throw CommandExit{exit_code::tolerance_miss, "worked-example majorant unexpectedly global"};
    checks.push_back({"T1", *t1, 1.5365, 5e-4, ""});

    const QuadraticMajorant maj(g, m, cfg);
    checks.push_back({"prefactor", maj.prefactor(), 0.8660, 5e-4, ""});
    checks.push_back({"phase", maj.phase(), 0.5236, 5e-4, ""});
    checks.push_back({"cubic coefficient", maj.rate() / 3.0, 0.2887, 5e-4,
                      "also printed as 0.2886; exact value sqrt(3)/6 = 0.288675"});

    ProblemSpec spec;
    spec.kernel = parse("(x^2 + x + 1) * s^2", {"t", "s", "x"});
    spec.horizon = 1.3;
    spec.grid_n = grid;
    spec.majorant = MajorantProblem(m, parse("x^2 + x + 1", {"x"}), cfg);
    spec.validate();
    const auto traj = picard_solve(spec);
    double sup_err = 0.0;
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        sup_err = std::max(sup_err, std::fabs(traj.values[i] - maj(traj.grid[i])));
    }
    checks.push_back({"solve: sup |x - x_hat| on [0, 1.3]", sup_err, 0.0, 1e-3,
                      traj.converged ? "" : "Picard iteration did not converge"});
    const auto cert = certify(traj, majorant_solution(*spec.majorant), 1e-6);
    checks.push_back({"certify: min slack", std::min(cert.min_slack, 0.0), 0.0, 1e-6,
                      "equality case: the solution coincides with the majorant"});

    bool all = traj.converged;
    Json rows = Json::array();
    session.line("quantity                             computed        reference       tolerance  status");
    for (const auto& c : checks) {
        const bool ok = c.passed();
        all = all && ok;
        rows.push_back({{"quantity", c.name},
                        {"computed", c.computed},
                        {"reference", c.reference},
                        {"tolerance", c.tolerance},
                        {"pass", ok},
                        {"note", c.note}});
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-36s %-15.10g %-15.10g %-10.1e %s", c.name.c_str(), c.computed,
                      c.reference, c.tolerance, ok ? "ok" : "MISS");
        session.line(buf + (c.note.empty() ? std::string() : "  (" + c.note + ")"));
    }
    session.root()["checks"] = rows;
    session.verdicts()["all_pass"] = all;
    session.verdicts()["certificate_holds"] = cert.holds;
    session.verdicts()["iterations"] = traj.iterations_used;
    if (!all) {
        return session.finish(exit_code::tolerance_miss,
                              "some values miss their tolerance; the trapezoid error grows like h^2, so grid " +
                                  std::to_string(grid) + " may be too coarse (default 4096)");
    }
    return session.finish(exit_code::ok);
}

int report_error(const std::string& command, const Options& opts, std::ostream& out, std::ostream& err, int code,
                 const std::string& what) {
    if (opts.json) {
        Json j;
        j["command"] = command;
        j["exit_code"] = code;
        j["error"] = what;
        out << j.dump(2) << '\n';
    }
    err << "veq: error: " << what << '\n';
    return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"veq: majorants, blow-up times and certified Picard solutions for Volterra equations"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opts;
    double quad_tol = 0.0;
    auto* quad_opt = app.add_option("--quad-tol", quad_tol, "absolute and relative quadrature tolerance")
                         ->check(CLI::PositiveNumber);
    app.add_flag("--verbose", opts.verbose, "progress diagnostics on stderr");
    app.add_flag("--json", opts.json, "machine-readable report");

    std::string file;
    std::string out_path;
    double until = 0.95;
    int points = 200;
    double t_max = 0.0;
    int grid = 4096;

    auto* blowup = app.add_subcommand("blowup", "classify global existence vs. blow-up and report T1");
    blowup->add_option("file", file, "problem file")->required();
    auto* majorant = app.add_subcommand("majorant", "tabulate the majorant as CSV t,majorant");
    majorant->add_option("file", file, "problem file")->required();
    majorant->add_option("--until", until, "fraction of T1 to tabulate")->capture_default_str();
    majorant->add_option("--points", points, "number of rows")->capture_default_str();
    auto* t_max_opt = majorant->add_option("--t-max", t_max, "end of range for global majorants");
    majorant->add_option("--out", out_path, "CSV path (default stdout)");
    auto* solve = app.add_subcommand("solve", "Picard solution with optional certificate");
    solve->add_option("file", file, "problem file")->required();
    solve->add_option("--out", out_path, "CSV path (default stdout)");
    auto* tangency = app.add_subcommand("tangency", "solve r = M(r, rho), 1 = M_r(r, rho)");
    tangency->add_option("file", file, "problem file")->required();
    auto* demo = app.add_subcommand("demo-paper", "reproduce the worked example end to end");
    demo->add_option("--grid", grid, "Picard grid panels")->capture_default_str()->check(CLI::Range(16, 1 << 20));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::input_error;
    }
    if (quad_opt->count()) opts.quad_tol = quad_tol;

    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        if (sub == blowup) return cmd_blowup(file, opts, out, err);
        if (sub == majorant) {
            return cmd_majorant(file, until, points, t_max_opt->count() ? std::optional<double>(t_max) : std::nullopt,
                                out_path, opts, out, err);
        }
        if (sub == solve) return cmd_solve(file, out_path, opts, out, err);
        if (sub == tangency) return cmd_tangency(file, opts, out, err);
        return cmd_demo_paper(grid, opts, out, err);
    } catch (const CommandExit& e) {
        return report_error(command, opts, out, err, e.code, e.message);
    } catch (const ConvergenceError& e) {
        return report_error(command, opts, out, err, exit_code::no_convergence, e.what());
    } catch (const QuadratureError& e) {
        return report_error(command, opts, out, err, exit_code::no_convergence, e.what());
    } catch (const Error& e) {
        return report_error(command, opts, out, err, exit_code::input_error, e.what());
    }
}

}  // namespace veq
