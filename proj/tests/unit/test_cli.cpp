// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include "veq/cli.hpp"
#include "veq/error.hpp"
#include "veq/problem_file.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace veq;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run veq_run(std::vector<std::string> args) {
    args.insert(args.begin(), "veq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string problem(const std::string& name) { return std::string(VEQ_PROBLEMS_DIR) + "/" + name; }

/// Writes `text` to a fresh file in the temp directory and returns its path.
std::string scratch(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / "veq_cli_tests";
    fs::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path, std::ios::binary) << text;
    return path.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

double closed_form(double t) {
    return std::sqrt(3.0) / 2.0 * std::tan(std::numbers::pi / 6.0 + std::sqrt(3.0) / 6.0 * t * t * t) - 0.5;
}

}  // namespace

TEST_CASE("problem file parsing", "[cli][file]") {
    const auto f = ProblemFile::parse("# header\n[problem]\nkernel = s * x  # trailing\nhorizon=1.5\n\n"
                                      "[majorant]\ngamma_quadratic = 1, 2 ,3\n",
                                      "p.veq");
    REQUIRE(f.has_section("problem"));
    REQUIRE_FALSE(f.has_section("algebraic"));
    REQUIRE(f.get("problem", "kernel") == std::optional<std::string>("s * x"));
    REQUIRE(f.number("problem", "horizon") == std::optional<double>(1.5));
    REQUIRE(f.numbers("majorant", "gamma_quadratic", 3) == std::optional<std::vector<double>>({1, 2, 3}));
    REQUIRE(f.where("problem", "horizon") == "p.veq:4");
    REQUIRE_FALSE(f.number("numerics", "grid_n"));
    REQUIRE_THROWS_AS(f.numbers("majorant", "gamma_quadratic", 2), ValidationError);
    REQUIRE_THROWS_AS(f.require("problem", "missing"), ValidationError);

    const auto error_line = [](const std::string& text) {
        try {
            ProblemFile::parse(text, "f");
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    REQUIRE(error_line("[nope]\n").rfind("f:1: unknown section", 0) == 0);
    REQUIRE(error_line("kernel = 1\n").rfind("f:1: key outside", 0) == 0);
    REQUIRE(error_line("[problem]\n\nkernel = 1\nkernel = 2\n").rfind("f:4: duplicate key", 0) == 0);
    REQUIRE(error_line("[problem]\n[problem]\n").rfind("f:2: duplicate section", 0) == 0);
    REQUIRE(error_line("[problem]\nwhat = 1\n").rfind("f:2: unknown key", 0) == 0);
    REQUIRE(error_line("[problem]\nkernel =\n").rfind("f:2: missing value", 0) == 0);
    REQUIRE(error_line("[problem]\nkernel\n").rfind("f:2: expected", 0) == 0);
    REQUIRE(error_line("[problem\n").rfind("f:1: unterminated", 0) == 0);

    const auto nums = ProblemFile::parse("[numerics]\ngrid_n = 12x\nconv_tol = 1e-9\nmax_iters = 3.5\n");
    REQUIRE_THROWS_AS(nums.integer("numerics", "grid_n"), ValidationError);
    REQUIRE_THROWS_AS(nums.integer("numerics", "max_iters"), ValidationError);
    REQUIRE(nums.number("numerics", "conv_tol") == std::optional<double>(1e-9));
    REQUIRE_THROWS_AS(ProblemFile::parse("[problem]\nhorizon = inf\n").number("problem", "horizon"),
                      ValidationError);
}

TEST_CASE("blowup command", "[cli][blowup]") {
    for (const char* file : {"worked_example.veq", "worked_example_general.veq"}) {
        const auto r = veq_run({"--json", "blowup", problem(file)});
        INFO(file << "\n" << r.out << r.err);
        REQUIRE(r.code == exit_code::ok);
        const auto j = nlohmann::json::parse(r.out);
        REQUIRE(j["verdicts"]["classification"] == "BlowupAt");
        REQUIRE(std::fabs(j["verdicts"]["T1"].get<double>() - 1.5365) <= 5e-4);
        REQUIRE(j["exit_code"] == 0);
        REQUIRE(j.contains("wall_time_s"));
    }
    const auto text = veq_run({"blowup", problem("worked_example.veq")});
    REQUIRE(text.out.find("BlowupAt T1=1.5365") != std::string::npos);

    REQUIRE(veq_run({"blowup", problem("linear_global.veq")}).out.rfind("Global", 0) == 0);
    const auto unknown = veq_run({"blowup", problem("inconclusive.veq")});
    REQUIRE(unknown.code == exit_code::inconclusive);
    REQUIRE(unknown.out.rfind("Unknown", 0) == 0);
}

TEST_CASE("input errors exit with 2", "[cli][errors]") {
    const auto bad_expr = scratch("bad_expr.veq", "[majorant]\nm = s^^2\ngamma = 1 + x\n");
    const auto r = veq_run({"blowup", bad_expr});
    REQUIRE(r.code == exit_code::input_error);
    REQUIRE(r.err.find("bad_expr.veq:2") != std::string::npos);
    REQUIRE(r.err.find("^") != std::string::npos);

    REQUIRE(veq_run({"blowup", scratch("wrong_var.veq", "[majorant]\nm = s\ngamma = 1 + y\n")}).code ==
            exit_code::input_error);
    REQUIRE(veq_run({"blowup", scratch("two_gammas.veq", "[majorant]\nm = s\ngamma = 1 + x\n"
                                                         "gamma_linear = 1, 1\n")})
                .code == exit_code::input_error);
    REQUIRE(veq_run({"blowup", scratch("no_majorant.veq", "[problem]\nkernel = 1\n")}).code ==
            exit_code::input_error);
    REQUIRE(veq_run({"blowup", "/nonexistent/file.veq"}).code == exit_code::input_error);
    REQUIRE(veq_run({"tangency", problem("worked_example_general.veq")}).code == exit_code::input_error);
    REQUIRE(veq_run({"solve", scratch("no_horizon.veq", "[problem]\nkernel = 1\n")}).code ==
            exit_code::input_error);
    REQUIRE(veq_run({"majorant", problem("linear_global.veq"), "--until", "1.5"}).code == exit_code::input_error);
    REQUIRE(veq_run({"majorant", scratch("global_no_end.veq", "[majorant]\nm = 1\ngamma_linear = 1, 1\n")})
                .code == exit_code::input_error);

    // Argument errors come from the option parser.
    REQUIRE(veq_run({}).code == exit_code::input_error);
    REQUIRE(veq_run({"frobnicate"}).code == exit_code::input_error);
    REQUIRE(veq_run({"blowup"}).code == exit_code::input_error);
    REQUIRE(veq_run({"demo-paper", "--grid", "abc"}).code == exit_code::input_error);
    REQUIRE(veq_run({"--quad-tol", "-1", "blowup", problem("worked_example.veq")}).code == exit_code::input_error);
    const auto help = veq_run({"--help"});
    REQUIRE(help.code == exit_code::ok);
    REQUIRE(help.out.find("demo-paper") != std::string::npos);
}

TEST_CASE("majorant command writes a monotone CSV", "[cli][majorant]") {
    const auto csv_path = scratch("maj.csv", "");
    const auto r = veq_run({"majorant", problem("worked_example.veq"), "--out", csv_path});
    REQUIRE(r.code == exit_code::ok);
    const auto rows = csv_rows(slurp(csv_path));
    REQUIRE(rows.size() == 201);
    REQUIRE(rows[0] == std::vector<std::string>{"t", "majorant"});
    REQUIRE(rows[1] == std::vector<std::string>{"0", "0"});
    double previous = -1.0, nearest = 1e9, nearest_t = 0.0, nearest_v = 0.0, last_t = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double t = std::stod(rows[i][0]), v = std::stod(rows[i][1]);
        REQUIRE(std::isfinite(v));
        REQUIRE(v > previous);
        previous = v;
        last_t = t;
        if (std::fabs(t - 1.0) < nearest) {
            nearest = std::fabs(t - 1.0);
            nearest_t = t;
            nearest_v = v;
        }
    }
    REQUIRE(std::fabs(last_t - 0.95 * 1.5365254110059389) <= 1e-9);
    // Four-digit formula at the row nearest t = 1.
    const double four_digit = 0.8660 * std::tan(0.5236 + 0.2887 * nearest_t * nearest_t * nearest_t) - 0.5;
    REQUIRE(std::fabs(nearest_v - four_digit) <= 1e-3);
    REQUIRE(std::fabs(nearest_v - closed_form(nearest_t)) <= 1e-9);

    // Exactly t = 1 for the general path: --until chosen so a row lands on it.
    const double until = 1.0 / 1.5365254110059389;
    const auto exact = veq_run({"majorant", problem("worked_example_general.veq"), "--until",
                                std::to_string(until), "--points", "2"});
    REQUIRE(exact.code == exit_code::ok);
    const auto two = csv_rows(exact.out);
    REQUIRE(two.size() == 3);
    REQUIRE(std::fabs(std::stod(two[2][1]) - closed_form(std::stod(two[2][0]))) <= 1e-6);
    REQUIRE(std::fabs(std::stod(two[2][1]) - 0.41387302401062723) <= 1e-5);

    const auto global = veq_run({"majorant", problem("linear_global.veq"), "--points", "3"});
    REQUIRE(global.code == exit_code::ok);
    const auto g = csv_rows(global.out);
    REQUIRE(g.back()[0] == "2");
    // x' = 1 + x/2 gives x(2) = 2(e - 1).
    REQUIRE(std::fabs(std::stod(g.back()[1]) - 2.0 * (std::numbers::e - 1.0)) <= 1e-9);
}

TEST_CASE("CSV output is deterministic and full precision", "[cli][csv]") {
    const auto a = veq_run({"solve", problem("linear_global.veq")});
    const auto b = veq_run({"solve", problem("linear_global.veq")});
    REQUIRE(a.code == exit_code::ok);
    REQUIRE(a.out == b.out);
    const auto rows = csv_rows(a.out);
    REQUIRE(rows[0] == std::vector<std::string>{"t", "x", "majorant", "slack"});
    REQUIRE(rows.size() == 1026);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        for (const auto& cell : rows[i]) {
            REQUIRE(std::isfinite(std::stod(cell)));
            REQUIRE(cell.find_first_not_of("0123456789.e+-") == std::string::npos);
        }
        // %.17g round-trips.
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", std::stod(rows[i][1]));
        REQUIRE(rows[i][1] == buf);
    }
    // The report goes to stderr when CSV takes stdout.
    REQUIRE(a.err.find("certificate") != std::string::npos);

    const auto m1 = veq_run({"majorant", problem("worked_example.veq"), "--points", "50"});
    const auto m2 = veq_run({"majorant", problem("worked_example.veq"), "--points", "50"});
    REQUIRE(m1.out == m2.out);
}

TEST_CASE("solve command", "[cli][solve]") {
    const auto csv_path = scratch("solve.csv", "");
    const auto r = veq_run({"--json", "solve", problem("worked_example.veq"), "--out", csv_path});
    INFO(r.out << r.err);
    REQUIRE(r.code == exit_code::ok);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["verdicts"]["converged"] == true);
    REQUIRE(j["verdicts"]["certificate_holds"] == true);
    REQUIRE(j["inputs"]["grid_n"] == 4096);
    REQUIRE(std::fabs(j["verdicts"]["x_at_horizon"].get<double>() - closed_form(1.3)) <= 1e-3);
    const auto rows = csv_rows(slurp(csv_path));
    REQUIRE(rows.size() == 4098);

    // Without a majorant only t,x is written.
    const auto plain = veq_run({"solve", scratch("plain.veq", "[problem]\nkernel = x + 1\nhorizon = 1\n"
                                                              "[numerics]\ngrid_n = 256\n")});
    REQUIRE(plain.code == exit_code::ok);
    const auto prow = csv_rows(plain.out);
    REQUIRE(prow[0] == std::vector<std::string>{"t", "x"});
    REQUIRE(std::fabs(std::stod(prow.back()[1]) - (std::numbers::e - 1.0)) <= 1e-3);

    // Horizon defaults to 0.85 T1 when the majorant blows up.
    const auto dflt = veq_run({"--json", "solve", problem("worked_example_general.veq"), "--out", csv_path});
    REQUIRE(dflt.code == exit_code::ok);
    REQUIRE(std::fabs(nlohmann::json::parse(dflt.out)["inputs"]["horizon"].get<double>() -
                      0.85 * 1.5365254110059389) <= 1e-9);
}

TEST_CASE("solve exit codes", "[cli][solve][errors]") {
    const auto blow = scratch("blow.veq", "[problem]\nkernel = 1 + x^2\nhorizon = 3\n[numerics]\ngrid_n = 64\n");
    REQUIRE(veq_run({"solve", blow}).code == exit_code::no_convergence);
    const auto capped =
        scratch("capped.veq", "[problem]\nkernel = x + 1\nhorizon = 1\n[numerics]\ngrid_n = 64\nmax_iters = 3\n");
    const auto c = veq_run({"solve", capped});
    REQUIRE(c.code == exit_code::no_convergence);
    REQUIRE(c.err.find("did NOT converge") != std::string::npos);

    const auto violating = scratch("violating.veq", "[problem]\nkernel = 2 * (x^2 + 1) * s^2\nhorizon = 1\n"
                                                    "[majorant]\nm = s^2\ngamma = 1 + x^2\n"
                                                    "[numerics]\ngrid_n = 256\n");
    const auto v = veq_run({"--json", "solve", violating, "--out", scratch("v.csv", "")});
    REQUIRE(v.code == exit_code::certificate_violation);
    const auto j = nlohmann::json::parse(v.out);
    REQUIRE(j["verdicts"]["certificate_holds"] == false);
    REQUIRE(j["verdicts"]["bound_check"]["value_violations"].get<int>() > 0);

    // Solution under the majorant but kernel not bounded by it everywhere.
    const auto loose = scratch("loose.veq", "[problem]\nkernel = s^2 * (1 + x + x^2) * (1 + 0.5 * sin(20 * t))\n"
                                            "horizon = 0.5\n[majorant]\nm = s^2\ngamma_quadratic = 1, 1, 1\n"
                                            "[numerics]\ngrid_n = 256\n");
    REQUIRE(veq_run({"solve", loose, "--out", scratch("l.csv", "")}).code == exit_code::certificate_violation);

    REQUIRE(veq_run({"solve", problem("inconclusive.veq")}).code == exit_code::input_error);
    const auto unknown = scratch("unknown.veq", "[problem]\nkernel = 1\nhorizon = 1\n[majorant]\nm = 1\n"
                                                "gamma = (1 + x)^1.01\n");
    REQUIRE(veq_run({"solve", unknown}).code == exit_code::inconclusive);
}

TEST_CASE("tangency command", "[cli][tangency]") {
    const auto r = veq_run({"tangency", problem("worked_example.veq")});
    REQUIRE(r.code == exit_code::ok);
    REQUIRE(r.out.rfind("(r*,rho*)=(1,1)\n", 0) == 0);
    REQUIRE(r.out.find("exists on [0, 1]") != std::string::npos);

    const auto j = nlohmann::json::parse(veq_run({"--json", "tangency", problem("tangency_half.veq")}).out);
    REQUIRE(std::fabs(j["verdicts"]["rho_star"].get<double>() - std::sqrt(0.5)) <= 1e-9);
    REQUIRE(std::fabs(j["verdicts"]["norm_bound"].get<double>() - (2.0 - std::sqrt(3.0))) <= 1e-9);

    REQUIRE(veq_run({"tangency", scratch("refuse.veq", "[algebraic]\nM = rho^3/3 * (1 + r + r^2)\nrho = 1.2\n")})
                .code == exit_code::input_error);
    // M = rho (1 + r): the tangency escapes to r = infinity.
    REQUIRE(veq_run({"tangency", scratch("escape.veq", "[algebraic]\nM = rho * (1 + r)\n")}).code ==
            exit_code::inconclusive);
}

TEST_CASE("demo-paper", "[cli][demo]") {
    const auto r = veq_run({"demo-paper"});
    INFO(r.out << r.err);
    REQUIRE(r.code == exit_code::ok);
    REQUIRE(r.out.find("MISS") == std::string::npos);
    REQUIRE(r.out.find("0.2886") != std::string::npos);

    const auto j = nlohmann::json::parse(veq_run({"demo-paper", "--json"}).out);
    REQUIRE(j["verdicts"]["all_pass"] == true);
    REQUIRE(j["checks"].size() == 8);

    const auto coarse = veq_run({"demo-paper", "--grid", "64"});
    REQUIRE(coarse.code == exit_code::tolerance_miss);
    REQUIRE(coarse.out.find("MISS") != std::string::npos);
    REQUIRE(coarse.err.find("grid 64") != std::string::npos);
}

TEST_CASE("quadrature tolerance override", "[cli]") {
    const auto loose = veq_run({"--json", "--quad-tol", "1e-6", "blowup", problem("worked_example_general.veq")});
    REQUIRE(loose.code == exit_code::ok);
    REQUIRE(std::fabs(nlohmann::json::parse(loose.out)["verdicts"]["T1"].get<double>() - 1.5365254110059389) <=
            1e-4);
}
