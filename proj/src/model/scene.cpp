#include "morin/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace morin::model {

using nlohmann::json;

double Box::diameter() const {
    double s = 0.0;
    for (const auto& [lo, hi] : bounds) s += (hi - lo) * (hi - lo);
    return std::sqrt(s);
}

bool Box::contains(std::span<const double> x, double slack) const {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (x[i] < bounds[i].first - slack || x[i] > bounds[i].second + slack) return false;
    }
    return true;
}

double Box::inset(std::span<const double> x) const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bounds.size(); ++i) d = std::min({d, x[i] - bounds[i].first, bounds[i].second - x[i]});
    return d;
}

namespace {

struct Entry {
    std::string key;
    json value;
    std::size_t line = 0;
};

struct RawScene {
    std::map<std::string, std::vector<Entry>> sections;
    std::vector<std::string> order;
};

const std::map<std::string, std::set<std::string>> kKeys{
    {"scene", {"name", "ambient_dim", "vars"}},
    {"definitions", {}},
    {"manifold", {"constraints"}},
    {"coframe", {"n", "omega", "mode"}},
    {"covector", {"a", "rng_seed"}},
    {"solver", {"box", "tol_residual", "tol_rank", "grid", "max_depth"}},
    {"hints", {}},
};

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            ++depth;
        } else if (c == ']' || c == '}') {
            --depth;
        }
    }
    return depth;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

class Reader {
public:
    Reader(std::string_view text, std::string origin) : origin_(std::move(origin)) {
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) lines_.push_back(line);
    }

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw SceneError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    RawScene read() {
        RawScene raw;
        std::string section;
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            std::string s = trim(strip_comment(lines_[i]));
            std::size_t lineno = i + 1;
            if (s.empty()) continue;
            if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
                section = trim(s.substr(1, s.size() - 2));
                if (!kKeys.count(section)) fail(lineno, "unknown section [" + section + "]");
                if (raw.sections.count(section)) fail(lineno, "duplicate section [" + section + "]");
                raw.sections[section];
                raw.order.push_back(section);
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
            if (section.empty()) fail(lineno, "key outside of any section");
            std::string key = trim(s.substr(0, eq));
            std::string value = trim(s.substr(eq + 1));
            const auto& allowed = kKeys.at(section);
            bool open = section == "definitions" || section == "hints";
            if (!open && !allowed.count(key)) fail(lineno, "unknown key '" + key + "' in [" + section + "]");
            if (!seen.insert({section, key}).second) fail(lineno, "duplicate key '" + key + "'");
            while (bracket_balance(value) > 0 && i + 1 < lines_.size()) {
                ++i;
                value += "\n" + strip_comment(lines_[i]);
            }
            if (bracket_balance(value) != 0) fail(lineno, "unbalanced brackets in value of '" + key + "'");
            json v;
            try {
                v = json::parse(value);
            } catch (const json::parse_error& e) {
                fail(lineno, "value of '" + key + "' is not valid JSON");
            }
            raw.sections[section].push_back({key, v, lineno});
        }
        return raw;
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::vector<std::string> lines_;
};

class Builder {
public:
    Builder(const Reader& reader, RawScene raw) : reader_(reader), raw_(std::move(raw)) {}

    Scene build() {
        Scene s;
        const Entry* e = nullptr;
        require_section("scene");
        if ((e = find("scene", "name"))) s.name = as_string(*e);
        e = require("scene", "ambient_dim");
        s.ambient_dim = as_count(*e);
        e = require("scene", "vars");
        if (!e->value.is_array()) reader_.fail(e->line, "vars must be a list of names");
        for (const auto& v : e->value) {
            if (!v.is_string() || !is_identifier(v.get<std::string>())) reader_.fail(e->line, "invalid variable name");
            s.vars.push_back(v.get<std::string>());
        }
        if (s.vars.size() != s.ambient_dim) reader_.fail(e->line, "vars has " + std::to_string(s.vars.size()) + " names but ambient_dim is " + std::to_string(s.ambient_dim));
        if (std::set<std::string>(s.vars.begin(), s.vars.end()).size() != s.vars.size()) reader_.fail(e->line, "duplicate variable names");
        if (s.ambient_dim == 0 || s.ambient_dim > 16) reader_.fail(e->line, "ambient_dim must be between 1 and 16");

        for (const Entry& d : section("definitions")) {
            if (!is_identifier(d.key)) reader_.fail(d.line, "invalid definition name '" + d.key + "'");
            if (std::find(s.vars.begin(), s.vars.end(), d.key) != s.vars.end()) reader_.fail(d.line, "definition shadows variable '" + d.key + "'");
            defs_[d.key] = expression(d, as_string(d), s.vars);
        }

        if ((e = find("manifold", "constraints"))) {
            if (!e->value.is_array()) reader_.fail(e->line, "constraints must be a list of expressions");
            for (const auto& v : e->value) s.constraints.push_back(expression(*e, string_of(*e, v), s.vars));
        }
        if (s.constraints.size() >= s.ambient_dim) reader_.fail(e ? e->line : 0, "too many constraints for ambient_dim");

        require_section("coframe");
        e = require("coframe", "n");
        std::size_t n = as_count(*e);
        std::size_t nline = e->line;
        if ((e = find("coframe", "mode"))) {
            std::string m = as_string(*e);
            if (m == "frame") s.mode = FrameMode::frame;
            else if (m == "coframe") s.mode = FrameMode::coframe;
            else reader_.fail(e->line, "mode must be \"frame\" or \"coframe\"");
        }
        e = require("coframe", "omega");
        if (!e->value.is_array() || e->value.size() != n) reader_.fail(e->line, "omega must have n = " + std::to_string(n) + " rows");
        for (const auto& row : e->value) {
            if (!row.is_array() || row.size() != s.ambient_dim) reader_.fail(e->line, "each omega row must have " + std::to_string(s.ambient_dim) + " entries");
            std::vector<Expr> r;
            for (const auto& v : row) r.push_back(expression(*e, string_of(*e, v), s.vars));
            s.coframe.push_back(std::move(r));
        }
        if (n == 0) reader_.fail(nline, "n must be positive");
        if (n > s.manifold_dim()) reader_.fail(nline, "dimension mismatch: n = " + std::to_string(n) + " exceeds manifold dimension m = " + std::to_string(s.manifold_dim()));

        if ((e = find("covector", "a"))) {
            std::vector<double> a = numbers(*e);
            if (a.size() != n) reader_.fail(e->line, "covector a must have n entries");
            if (std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; })) reader_.fail(e->line, "covector a must be nonzero");
            s.covector = a;
        }
        if ((e = find("covector", "rng_seed"))) s.rng_seed = as_count(*e);

        require_section("solver");
        e = require("solver", "box");
        if (!e->value.is_array() || e->value.size() != s.ambient_dim) reader_.fail(e->line, "box must list one [lo, hi] pair per variable");
        for (const auto& pair : e->value) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) reader_.fail(e->line, "box entries must be [lo, hi] pairs");
            double lo = pair[0].get<double>();
            double hi = pair[1].get<double>();
            if (!(lo < hi)) reader_.fail(e->line, "empty box: lo must be below hi");
            s.box.bounds.emplace_back(lo, hi);
        }
        if ((e = find("solver", "tol_residual"))) s.tol.residual = positive(*e);
        if ((e = find("solver", "tol_rank"))) s.tol.rank = positive(*e);
        if ((e = find("solver", "grid"))) {
            s.grid = as_count(*e);
            if (s.grid < 8) reader_.fail(e->line, "grid must be at least 8");
        }
        if ((e = find("solver", "max_depth"))) {
            s.max_depth = as_count(*e);
            if (s.max_depth < 1 || s.max_depth > n) reader_.fail(e->line, "max_depth must lie in [1, n]");
        }

        for (const Entry& h : section("hints")) {
            std::size_t depth = 0;
            if (h.key.rfind("delta_", 0) == 0) {
                try {
                    depth = std::stoul(h.key.substr(6));
                } catch (const std::exception&) {
                    depth = 0;
                }
            }
            if (depth < 2 || depth > n) reader_.fail(h.line, "hint key must be delta_k with 2 <= k <= n");
            s.hints[depth] = expression(h, as_string(h), s.vars);
        }
        return s;
    }

private:
    const std::vector<Entry>& section(const std::string& name) const {
        static const std::vector<Entry> empty;
        auto it = raw_.sections.find(name);
        return it == raw_.sections.end() ? empty : it->second;
    }

    void require_section(const std::string& name) const {
        if (!raw_.sections.count(name)) throw SceneError(reader_.origin() + ": missing section [" + name + "]");
    }

    const Entry* find(const std::string& sec, const std::string& key) const {
        for (const Entry& e : section(sec))
            if (e.key == key) return &e;
        return nullptr;
    }

    const Entry* require(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        if (!e) throw SceneError(reader_.origin() + ": missing key '" + key + "' in [" + sec + "]");
        return e;
    }

    std::string as_string(const Entry& e) const { return string_of(e, e.value); }

    std::string string_of(const Entry& e, const json& v) const {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        reader_.fail(e.line, "expected a string for '" + e.key + "'");
    }

    std::size_t as_count(const Entry& e) const {
        if (!e.value.is_number_unsigned() && !(e.value.is_number_integer() && e.value.get<long long>() >= 0)) reader_.fail(e.line, "expected a non-negative integer for '" + e.key + "'");
        return e.value.get<std::size_t>();
    }

    double positive(const Entry& e) const {
        if (!e.value.is_number() || !(e.value.get<double>() > 0.0)) reader_.fail(e.line, "expected a positive number for '" + e.key + "'");
        return e.value.get<double>();
    }

    std::vector<double> numbers(const Entry& e) const {
        if (!e.value.is_array()) reader_.fail(e.line, "expected a list of numbers for '" + e.key + "'");
        std::vector<double> out;
        for (const auto& v : e.value) {
            if (!v.is_number()) reader_.fail(e.line, "expected a list of numbers for '" + e.key + "'");
            out.push_back(v.get<double>());
        }
        return out;
    }

    Expr expression(const Entry& e, const std::string& text, const std::vector<std::string>& vars) const {
        try {
            return expr::parse_expr(text, vars, &defs_);
        } catch (const expr::ParseError& err) {
            reader_.fail(e.line, "in '" + e.key + "': " + err.what() + " of \"" + text + "\"");
        }
    }

    const Reader& reader_;
    RawScene raw_;
    expr::Definitions defs_;
};

}  // namespace

Scene parse_scene(std::string_view text, const std::string& origin) {
    Reader reader(text, origin);
    Builder b(reader, reader.read());
    Scene s = b.build();
    s.source = std::string(text);
    return s;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str(), path);
}

}  // namespace morin::model
