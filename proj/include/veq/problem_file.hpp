// SPDX-License-Identifier: MIT
/**
 * @file problem_file.hpp
 * @brief Line-based problem files: `[section]` headers, `key = value` pairs
 *        and `#` comments.
 *
 * Sections: problem (kernel, horizon), majorant (m, gamma | gamma_quadratic |
 * gamma_linear), algebraic (M, rho), numerics (grid_n, max_iters, conv_tol,
 * quad_abs_tol, quad_rel_tol, certify_tol).
 */
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veq {

struct ProblemEntry {
    std::string value;
    int line;
};

class ProblemFile {
public:
    /// Throws ValidationError naming `origin` and the line on malformed
    /// input, unknown sections or keys, and duplicates.
    static ProblemFile parse(std::string_view text, std::string origin = "<input>");
    /// Reads and parses a file; throws ValidationError if it cannot be read.
    static ProblemFile load(const std::string& path);

    const std::string& origin() const noexcept { return origin_; }
    bool has_section(std::string_view section) const;
    bool has(std::string_view section, std::string_view key) const;
    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    /// Throws ValidationError when the key is missing.
    const ProblemEntry& require(std::string_view section, std::string_view key) const;
    /// "origin:line" for error messages.
    std::string where(std::string_view section, std::string_view key) const;

    std::optional<double> number(std::string_view section, std::string_view key) const;
    std::optional<int> integer(std::string_view section, std::string_view key) const;
    /// Comma-separated reals; `count` entries required.
    std::optional<std::vector<double>> numbers(std::string_view section, std::string_view key,
                                               std::size_t count) const;

private:
    std::string origin_;
    std::map<std::string, std::map<std::string, ProblemEntry, std::less<>>, std::less<>> sections_;
};

}  // namespace veq
