// SPDX-License-Identifier: MIT
#include "veq/problem_file.hpp"

#include "veq/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace veq {

namespace {

struct SectionKeys {
    std::string_view name;
    std::vector<std::string_view> keys;
};

const std::array<SectionKeys, 4>& known_sections() {
    static const std::array<SectionKeys, 4> sections{{
        {"problem", {"kernel", "horizon"}},
        {"majorant", {"m", "gamma", "gamma_quadratic", "gamma_linear"}},
        {"algebraic", {"M", "rho"}},
        {"numerics", {"grid_n", "max_iters", "conv_tol", "quad_abs_tol", "quad_rel_tol", "certify_tol"}},
    }};
    return sections;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

ProblemFile ProblemFile::parse(std::string_view text, std::string origin) {
    ProblemFile file;
    file.origin_ = std::move(origin);
    const SectionKeys* current = nullptr;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto fail = [&](const std::string& why) {
            throw ValidationError(file.origin_ + ":" + std::to_string(line_no) + ": " + why);
        };

        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            const auto& sections = known_sections();
            const auto it = std::find_if(sections.begin(), sections.end(),
                                         [&](const SectionKeys& s) { return s.name == name; });
            if (it == sections.end()) fail("unknown section [" + std::string(name) + "]");
            if (file.sections_.count(name)) fail("duplicate section [" + std::string(name) + "]");
            current = &*it;
            file.sections_[std::string(name)];
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected 'key = value'");
        if (!current) fail("key outside of any section");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) fail("missing key before '='");
        if (value.empty()) fail("missing value for '" + std::string(key) + "'");
        if (std::find(current->keys.begin(), current->keys.end(), key) == current->keys.end()) {
            fail("unknown key '" + std::string(key) + "' in [" + std::string(current->name) + "]");
        }
        auto& section = file.sections_[std::string(current->name)];
        if (section.count(key)) fail("duplicate key '" + std::string(key) + "'");
        section.emplace(std::string(key), ProblemEntry{std::string(value), line_no});
    }
    return file;
}

ProblemFile ProblemFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read problem file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

bool ProblemFile::has_section(std::string_view section) const { return sections_.count(section) > 0; }

bool ProblemFile::has(std::string_view section, std::string_view key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::optional<std::string> ProblemFile::get(std::string_view section, std::string_view key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return std::nullopt;
    const auto kt = it->second.find(key);
    if (kt == it->second.end()) return std::nullopt;
    return kt->second.value;
}

const ProblemEntry& ProblemFile::require(std::string_view section, std::string_view key) const {
    const auto it = sections_.find(section);
    if (it != sections_.end()) {
        const auto kt = it->second.find(key);
        if (kt != it->second.end()) return kt->second;
    }
    throw ValidationError(origin_ + ": missing '" + std::string(key) + "' in [" + std::string(section) + "]");
}

std::string ProblemFile::where(std::string_view section, std::string_view key) const {
    const auto it = sections_.find(section);
    if (it != sections_.end()) {
        const auto kt = it->second.find(key);
        if (kt != it->second.end()) return origin_ + ":" + std::to_string(kt->second.line);
    }
    return origin_;
}

std::optional<double> ProblemFile::number(std::string_view section, std::string_view key) const {
    const auto raw = get(section, key);
    if (!raw) return std::nullopt;
    const auto v = to_double(*raw);
    if (!v) throw ValidationError(where(section, key) + ": '" + std::string(key) + "' is not a finite number");
    return v;
}

std::optional<int> ProblemFile::integer(std::string_view section, std::string_view key) const {
    const auto raw = get(section, key);
    if (!raw) return std::nullopt;
    const std::string_view s = trim(*raw);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(where(section, key) + ": '" + std::string(key) + "' is not an integer");
    }
    return v;
}

std::optional<std::vector<double>> ProblemFile::numbers(std::string_view section, std::string_view key,
                                                        std::size_t count) const {
    const auto raw = get(section, key);
    if (!raw) return std::nullopt;
    std::vector<double> out;
    std::string_view rest = *raw;
    while (true) {
        const auto comma = rest.find(',');
        const auto v = to_double(rest.substr(0, comma));
        if (!v) throw ValidationError(where(section, key) + ": '" + std::string(key) + "' has a non-numeric entry");
        out.push_back(*v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    if (out.size() != count) {
        throw ValidationError(where(section, key) + ": '" + std::string(key) + "' needs " + std::to_string(count) +
                              " comma-separated numbers");
    }
    return out;
}

}  // namespace veq
