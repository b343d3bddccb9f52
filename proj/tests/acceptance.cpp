// End-to-end acceptance: one PASS/FAIL line per criterion.
#include "morin/cli.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

using namespace morin;
using namespace morin::analysis;
using Json = nlohmann::json;

namespace {

const std::string kScenes = MORIN_SCENES;
const std::string kBinary = MORIN_BINARY;

std::string scene_path(const std::string& name) { return kScenes + "/" + name + ".scene"; }

struct Run {
    int code = -1;
    std::string out;
};

Run morin_cli(const std::string& args) {
    std::string cmd = kBinary + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

Json parse(const Run& r) {
    try {
        return Json::parse(r.out);
    } catch (const std::exception&) {
        return Json();
    }
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double max_coord_error(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Every expected point matched by exactly one found point and vice versa.
bool bijection(const std::vector<Point>& expected, const std::vector<Point>& found, double tol, std::string& why) {
    if (expected.size() != found.size()) {
        why = "expected " + std::to_string(expected.size()) + " points, found " + std::to_string(found.size());
        return false;
    }
    std::vector<bool> used(found.size(), false);
    for (const Point& e : expected) {
        std::size_t hit = found.size();
        for (std::size_t j = 0; j < found.size(); ++j)
            if (!used[j] && max_coord_error(e, found[j]) <= tol) {
                hit = j;
                break;
            }
        if (hit == found.size()) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "no match for (%g, %g, %g)", e[0], e[1], e[2]);
            why = buf;
            return false;
        }
        used[hit] = true;
    }
    return true;
}

Point json_point(const Json& j) {
    Point p;
    for (const auto& v : j) p.push_back(v.get<double>());
    return p;
}

// ---- closed-form oracles ----

// ex7: det[V1; V2; grad f] = u (x1^2 + 4 x3^2 + u^2) with u = 2 x1 - x2, so Sigma^1 = M ∩ {x2 = 2 x1}.
double ex7_constraint(const Point& x) { return x[0] * x[0] - x[0] * x[1] + x[2] * x[2] + 1.0; }
double ex7_sigma1_residual(const Point& x) { return std::max(std::abs(ex7_constraint(x)), std::abs(2 * x[0] - x[1])); }
// Zeros of a1 V1 + a2 V2 on M: on x2 = 2 x1, a1 x1 = 2 a2 x3 with x1^2 = 1 + x3^2.
std::vector<Point> ex7_zeros(const std::vector<double>& a) {
    const double r = a[1] / a[0];
    if (4 * r * r <= 1.0) return {};
    const double x3 = 1.0 / std::sqrt(4 * r * r - 1.0);
    const double x1 = 2 * r * x3;
    return {{x1, 2 * x1, x3}, {-x1, -2 * x1, -x3}};
}

// Torus (rho - 2)^2 + (x1 + x2)^2 = 1: the frame rank drops exactly where x1 + x2 = 0.
double torus_constraint(const Point& x) {
    double rho = std::hypot(x[1], x[2]);
    return (rho - 2) * (rho - 2) + (x[0] + x[1]) * (x[0] + x[1]) - 1.0;
}
double torus_sigma1_residual(const Point& x) { return std::max(std::abs(torus_constraint(x)), std::abs(x[0] + x[1])); }
// Zeros of xi on M: rho in {1, 3}, x1 = -x2 and a1 x2 + a2 x3 = 0.
std::vector<Point> torus_zeros(const std::vector<double>& a) {
    std::vector<Point> out;
    const double s = std::hypot(a[0], a[1]);
    for (double rho : {1.0, 3.0})
        for (double sign : {1.0, -1.0}) {
            double x2 = sign * rho * a[1] / s;
            double x3 = -sign * rho * a[0] / s;
            out.push_back({-x2, x2, x3});
        }
    return out;
}

const std::vector<Point> kEx7A2 = {{1, 2, 0}, {-1, -2, 0}};
const std::vector<Point> kTorusA2 = {{-3, 3, 0}, {3, -3, 0}, {-1, 1, 0}, {1, -1, 0}};

struct Result {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

std::vector<Point> a2_points(const Json& strata) {
    std::vector<Point> out;
    for (const auto& l : strata["levels"])
        if (l["depth"] == 2)
            for (const auto& p : l["points"])
                if (p["type"] == "A2") out.push_back(json_point(p["x"]));
    return out;
}

Result criterion1() {
    Result r;
    Json s = parse(morin_cli("strata " + scene_path("ex7") + " --depth 2 --no-timings"));
    if (s.is_null()) {
        r.fail("strata produced no JSON");
        return r;
    }
    std::vector<Point> a2 = a2_points(s["results"]);
    std::string why;
    if (!bijection(kEx7A2, a2, 1e-6, why)) r.fail("A2: " + why);
    Run c = morin_cli("check " + scene_path("ex7") + " --no-timings");
    Json j = parse(c);
    if (j.is_null() || j["results"]["morin"]["depths"].empty()) {
        r.fail("check produced no depth-2 report");
        return r;
    }
    const Json& d = j["results"]["morin"]["depths"][0];
    std::vector<Point> pts = a2_points(j["results"]["strata"]);
    std::vector<double> factors;
    for (std::size_t i = 0; i < d["condition_ii"].size(); ++i) {
        const Json& rc = d["condition_ii"][i];
        if (!rc["full"].get<bool>() || rc["verdict"] != "yes") r.fail("condition (ii) rank not full");
        if (!rc["gap_ratio"].is_number() || rc["gap_ratio"].get<double>() < 1e4) r.fail("gap ratio below 1e4");
        if (i < pts.size()) factors.push_back(std::abs(rc["determinant"].get<double>()) / (4.0 * std::abs(pts[i][0])));
    }
    if (factors.size() != 2) r.fail("expected two condition (ii) determinants");
    else if (!(factors[0] > 0.0) || std::abs(factors[0] - factors[1]) > 1e-6 * factors[0])
        r.fail("|det| / 4|x1| not a common positive factor");
    char buf[160];
    if (r.pass) {
        std::snprintf(buf, sizeof buf, "A2 = {(1,2,0), (-1,-2,0)}; |det| = %.6g * 4|x1|; gap %.3g", factors[0],
                      d["condition_ii"][0]["gap_ratio"].get<double>());
        r.detail = buf;
    }
    return r;
}

Result criterion2() {
    Result r;
    Json s = parse(morin_cli("strata " + scene_path("torus") + " --depth 2 --no-timings"));
    if (s.is_null()) {
        r.fail("strata produced no JSON");
        return r;
    }
    std::size_t closed = 0, curves = 0;
    for (const auto& l : s["results"]["levels"])
        if (l["depth"] == 1)
            for (const auto& c : l["curves"]) {
                ++curves;
                if (c["closed"].get<bool>()) ++closed;
                for (const auto& v : c["vertices"])
                    if (torus_sigma1_residual(json_point(v)) > 1e-6) r.fail("Sigma^1 vertex off x1 + x2 = 0");
            }
    if (curves != 2 || closed != 2) r.fail(std::to_string(curves) + " Sigma^1 components, " + std::to_string(closed) + " closed");
    std::string why;
    if (!bijection(kTorusA2, a2_points(s["results"]), 1e-6, why)) r.fail("A2: " + why);
    Run c = morin_cli("check " + scene_path("torus") + " --no-timings");
    if (c.code != 0) r.fail("check exit " + std::to_string(c.code));
    if (r.pass) r.detail = "2 closed Sigma^1 curves; 4 A2 points; check exit 0";
    return r;
}

Result criterion3() {
    Result r;
    Run run = morin_cli("euler " + scene_path("torus") + " --seed 42 --no-timings");
    Json j = parse(run);
    if (j.is_null()) {
        r.fail("euler produced no JSON");
        return r;
    }
    const Json& e = j["results"];
    if (run.code != 0) r.fail("euler exit " + std::to_string(run.code));
    // Independent count: the closed-form zeros for the covector actually used.
    std::vector<double> a = e["covector"].get<std::vector<double>>();
    std::size_t expected = torus_zeros(a).size();
    if (e["counts"]["unrestricted"].get<std::size_t>() != expected) r.fail("zero count differs from the closed form");
    if (e["chi_m_mod2"] != static_cast<int>(expected % 2) || e["chi_m_mod2"] != 0) r.fail("chi(T) mod 2 != 0");
    if (e["chi_closure"]["1"] != 0) r.fail("chi(A1 closure) mod 2 != 0");
    if (e["chi_closure"]["2"] != 4) r.fail("chi(A2 closure) != 4");
    if (!e["congruence_holds"].get<bool>()) r.fail("congruence fails");
    if (e["euler_via_morse"].is_null() || !e["euler_via_morse"]["ok"].get<bool>() || e["euler_via_morse"]["chi"] != 0)
        r.fail("euler_via_morse != 0");
    if (e["chi_curves"] != 0) r.fail("chi of Sigma^1 != 0");
    if (r.pass) r.detail = "0 ≡ 0 + 4 (mod 2); Morse chi 0; chi(Sigma^1) 0";
    return r;
}

Result criterion4() {
    Result r;
    Run v = morin_cli("check " + scene_path("sphere_v") + " --no-timings");
    Json jv = parse(v);
    if (v.code != 2) r.fail("sphere V check exit " + std::to_string(v.code));
    bool witness = false;
    if (!jv.is_null())
        for (const auto& d : jv["results"]["morin"]["depths"])
            for (const auto& w : d["witnesses"])
                if (w["condition"] == "condition (ii) rank failure" && w["detail"].get<std::string>().find("∇δ₂ ≈ 0 on Σ¹") != std::string::npos)
                    witness = true;
    if (!witness) r.fail("no condition (ii) witness for sphere V");
    Run w = morin_cli("check " + scene_path("sphere_w") + " --no-timings");
    if (w.code != 0) r.fail("sphere W check exit " + std::to_string(w.code));
    Json jw = parse(w);
    if (jw.is_null() || !a2_points(jw["results"]["strata"]).empty()) r.fail("sphere W has A2 points");
    Run e = morin_cli("euler " + scene_path("sphere_w") + " --no-timings");
    Json je = parse(e);
    if (e.code != 0 || je.is_null()) {
        r.fail("sphere W euler exit " + std::to_string(e.code));
        return r;
    }
    const Json& res = je["results"];
    if (!res["congruence_holds"].get<bool>() || res["counts"]["unrestricted"] != 2 || res["chi_m_mod2"] != 0)
        r.fail("sphere W congruence not 2 ≡ 0");
    if (res["euler_via_morse"].is_null() || res["euler_via_morse"]["chi"] != 2) r.fail("sphere W Morse chi != 2");
    if (r.pass) r.detail = "V exit 2 with ∇δ₂ ≈ 0 on Σ¹; W exit 0, A2 empty, 2 ≡ 0, Morse chi 2";
    return r;
}

struct Golden {
    std::string name;
    std::function<double(const Point&)> sigma1_residual;
    std::function<std::vector<Point>(const std::vector<double>&)> zeros;
    std::vector<Point> a2;
};

const std::vector<Golden>& goldens() {
    static const std::vector<Golden> g = {{"torus", torus_sigma1_residual, torus_zeros, kTorusA2},
                                          {"ex7", ex7_sigma1_residual, ex7_zeros, kEx7A2}};
    return g;
}

struct Draws {
    std::vector<ZeroAnalysis> zeros;
    std::size_t sigma3_levels = 0;
    double tol_residual = 0.0;
};

// 20 seeded unit covectors per golden scene, shared by criteria 5 and 6.
const std::map<std::string, Draws>& draws() {
    static std::map<std::string, Draws> cache;
    if (!cache.empty()) return cache;
    for (const Golden& g : goldens()) {
        Context ctx(model::load_scene(scene_path(g.name)));
        Strata strata = compute_strata(ctx, ctx.n());
        Draws& d = cache[g.name];
        d.sigma3_levels = strata.at(3) ? 1 : 0;
        d.tol_residual = ctx.solve().tol_residual;
        for (std::size_t i = 0; i < 20; ++i) d.zeros.push_back(analyze_zeros(ctx, strata, draw_covector(2024, i, 2)));
    }
    return cache;
}

Result criterion5() {
    Result r;
    std::size_t total = 0;
    for (const Golden& g : goldens()) {
        const Draws& d = draws().at(g.name);
        if (d.sigma3_levels != 0) r.fail(g.name + ": a Sigma^3 level exists for n = 2");
        std::set<int> parity0, parity1;
        for (const ZeroAnalysis& z : d.zeros) {
            std::vector<Point> found;
            for (const auto& rec : z.unrestricted) {
                found.push_back(rec.x);
                if (g.sigma1_residual(rec.x) > 10 * d.tol_residual) r.fail(g.name + ": zero off Sigma^1");
                if (!z.checks.zeros_on_sigma1) r.fail(g.name + ": solver chart residual above 10 tol");
                for (const Point& p : g.a2)
                    if (dist(rec.x, p) <= 1e-3) r.fail(g.name + ": zero within 1e-3 of Sigma^2");
            }
            std::string why;
            if (!bijection(g.zeros(z.a), found, 1e-6, why)) r.fail(g.name + ": zeros differ from the closed form: " + why);
            if (!z.checks.restricted_exclusion_vacuous || !z.checks.restricted_exclusion) r.fail(g.name + ": Sigma^3 exclusion not structural");
            const auto& r1 = z.restricted.at(1);
            for (const Point& p : g.a2) {
                bool hit = false;
                for (const auto& rec : r1) hit = hit || dist(rec.x, p) <= 1e-6;
                if (!hit) r.fail(g.name + ": A2 point missing from the zeros of xi|Sigma^1");
            }
            parity0.insert(static_cast<int>(z.unrestricted.size() % 2));
            parity1.insert(static_cast<int>(r1.size() % 2));
            total += z.unrestricted.size();
        }
        if (parity0.size() != 1 || parity1.size() != 1) r.fail(g.name + ": zero-count parity varies across draws");
    }
    if (r.pass) r.detail = "40 draws, " + std::to_string(total) + " zeros on Sigma^1 and off Sigma^2; parities stable";
    return r;
}

Result criterion6() {
    Result r;
    std::size_t a1 = 0;
    for (const Golden& g : goldens()) {
        for (const ZeroAnalysis& z : draws().at(g.name).zeros) {
            auto definite = [&](const ZeroRecord& rec) { return rec.nondegenerate == Verdict::yes && rec.bordered_gap >= kGapRatio; };
            for (const auto& rec : z.unrestricted)
                if (!definite(rec)) r.fail(g.name + ": degenerate or inconclusive unrestricted zero");
            for (const auto& [k, v] : z.restricted)
                for (const auto& rec : v)
                    if (!definite(rec)) r.fail(g.name + ": degenerate or inconclusive restricted zero");
            for (const auto& rec : z.unrestricted) {
                if (rec.type != 1) continue;
                ++a1;
                bool both = false;
                for (const auto& q : z.restricted.at(1))
                    if (dist(q.x, rec.x) <= 1e-6) both = definite(q) && definite(rec);
                if (!both) r.fail(g.name + ": A1 zero without both bordered determinants above tolerance");
            }
            if (!z.checks.a1_equivalence) r.fail(g.name + ": A1 equivalence check failed");
        }
    }
    if (r.pass) r.detail = std::to_string(a1) + " A1 zeros, both bordered determinants nondegenerate at each";
    return r;
}

Result criterion7() {
    Result r;
    std::string summary;
    for (const Golden& g : goldens()) {
        Context ctx(model::load_scene(scene_path(g.name)));
        Strata strata = compute_strata(ctx, 2);
        std::vector<Point> solver_a2;
        for (const auto& p : strata.at(2)->points) solver_a2.push_back(p.x);
        solver::OracleResult o = solver::grid_oracle(solver::OracleSystem(sigma_equations(ctx.scene(), 2), ctx.dim()), ctx.oracle_options(128));
        std::vector<Point> cells;
        for (const auto& c : o.clusters) cells.push_back(c.centroid);
        std::string why;
        if (!bijection(solver_a2, cells, 1e-3, why)) r.fail(g.name + " A2 oracle: " + why);
        std::vector<double> a = draw_covector(42, 0, 2);
        ZeroAnalysis z = analyze_zeros(ctx, strata, a);
        std::vector<Point> zeros;
        for (const auto& rec : z.unrestricted) zeros.push_back(rec.x);
        solver::OracleResult oz =
            solver::grid_oracle(solver::OracleSystem(zero_equations(ctx.scene(), 0, xi_components(ctx.scene(), a)), ctx.dim()), ctx.oracle_options(128));
        cells.clear();
        for (const auto& c : oz.clusters) cells.push_back(c.centroid);
        if (!bijection(zeros, cells, 1e-3, why)) r.fail(g.name + " zero oracle: " + why);
        summary += g.name + ": " + std::to_string(solver_a2.size()) + " A2, " + std::to_string(zeros.size()) + " zeros; ";
    }
    if (r.pass) r.detail = summary + "grid 128";
    return r;
}

Result criterion8() {
    Result r;
    double worst_grad = 0.0, worst_det = 0.0;
    std::size_t grads = 0, dets = 0;
    for (const std::string name : {"torus", "ex7", "sphere_v", "sphere_w"}) {
        Context ctx(model::load_scene(scene_path(name)));
        const model::Scene& sc = ctx.scene();
        const std::size_t dim = sc.ambient_dim;
        std::vector<Expr> fns = sc.constraints;
        for (const auto& row : sc.coframe) fns.insert(fns.end(), row.begin(), row.end());
        // The determinant of [omega; grad G] is the function whose zero set is Sigma^1.
        std::vector<std::vector<Expr>> m = sc.coframe;
        for (const Expr& g : sc.constraints) m.push_back(expr::gradient(g, dim));
        Expr det = expr::simplify(expr::symbolic_determinant(m));
        fns.push_back(det);
        std::vector<std::vector<Expr>> grad;
        for (const Expr& f : fns) grad.push_back(expr::gradient(f, dim));
        std::mt19937_64 rng(7);
        std::size_t tested = 0;
        for (int trial = 0; trial < 1000 && tested < 100; ++trial) {
            Point x(dim);
            for (std::size_t j = 0; j < dim; ++j)
                x[j] = std::uniform_real_distribution<double>(sc.box.bounds[j].first, sc.box.bounds[j].second)(rng);
            try {
                for (std::size_t f = 0; f < fns.size(); ++f) {
                    std::vector<double> sym(dim), fd(dim);
                    for (std::size_t j = 0; j < dim; ++j) {
                        sym[j] = expr::evaluate(grad[f][j], x);
                        const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
                        Point p = x, q = x;
                        p[j] += h;
                        q[j] -= h;
                        fd[j] = (expr::evaluate(fns[f], p) - expr::evaluate(fns[f], q)) / (2 * h);
                    }
                    double num = 0.0, den = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        num += (sym[j] - fd[j]) * (sym[j] - fd[j]);
                        den += sym[j] * sym[j];
                    }
                    double rel = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
                    worst_grad = std::max(worst_grad, rel);
                    ++grads;
                }
                linalg::Mat nm(m.size(), dim);
                for (std::size_t i = 0; i < m.size(); ++i)
                    for (std::size_t j = 0; j < dim; ++j) nm(i, j) = expr::evaluate(m[i][j], x);
                double a = expr::evaluate(det, x);
                double b = linalg::determinant(nm);
                worst_det = std::max(worst_det, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
                ++dets;
                ++tested;
            } catch (const expr::DomainError&) {
            }
        }
        if (tested < 100) r.fail(name + ": fewer than 100 evaluable points");
    }
    if (worst_grad > 1e-5) r.fail("derivative relative error " + std::to_string(worst_grad));
    if (worst_det > 1e-10) r.fail("determinant relative error " + std::to_string(worst_det));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu gradients, max rel err %.2e; %zu determinants, max rel err %.2e", grads, worst_grad, dets, worst_det);
    if (r.pass)
        r.detail = buf;
    else
        r.detail += std::string(" (") + buf + ")";
    return r;
}

Result criterion9() {
    Result r;
    const std::string args = "euler " + scene_path("torus") + " --seed 42 --no-timings";
    Run a = morin_cli(args);
    Run b = morin_cli(args);
    if (a.out.empty()) r.fail("no output");
    if (a.out != b.out) r.fail("outputs differ");
    if (r.pass) r.detail = std::to_string(a.out.size()) + " identical bytes";
    return r;
}

}  // namespace

int main() {
    using Fn = Result (*)();
    const std::vector<std::pair<const char*, Fn>> criteria = {
        {"ex7 golden strata", criterion1},        {"torus golden strata", criterion2}, {"torus congruence", criterion3},
        {"sphere negative control", criterion4},  {"zero location suite", criterion5}, {"nondegeneracy suite", criterion6},
        {"oracle equivalence", criterion7},       {"numerical hygiene", criterion8},   {"determinism", criterion9}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r.fail(std::string("exception: ") + e.what());
        }
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << r.detail << std::endl;
        if (!r.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
