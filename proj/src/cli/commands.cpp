#include "morin/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace morin::cli {

using namespace morin::analysis;

namespace {

class Clock {
public:
    void mark(const std::string& phase) {
        auto now = std::chrono::steady_clock::now();
        phases_[phase] = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
    }
    Json json() const {
        Json j = phases_;
        j["total"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
        return j;
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::chrono::steady_clock::time_point last_ = start_;
    Json phases_ = Json::object();
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw model::SceneError("cannot read scene file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int exit_for(Verdict v) { return v == Verdict::yes ? kOk : v == Verdict::no ? kNotMorin : kInconclusive; }

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::no || b == Verdict::no) return Verdict::no;
    if (a == Verdict::yes && b == Verdict::yes) return Verdict::yes;
    return Verdict::inconclusive;
}

std::string stratum_summary(const StratumResult& l) {
    std::string s = "A" + std::to_string(l.depth) + " (";
    if (l.dimension == 0) {
        std::size_t count = 0;
        for (const auto& c : l.classes)
            if (c.type == static_cast<int>(l.depth)) ++count;
        s += std::to_string(count) + (count == 1 ? " point" : " points");
    } else if (l.dimension == 1) {
        s += "curve";
        if (l.curves.size() > 1) s += ", " + std::to_string(l.curves.size()) + " components";
    } else {
        s += std::to_string(l.dimension) + "-dimensional, " + std::to_string(l.samples.size()) + " samples";
    }
    return s + ")";
}

std::vector<double> covector_for(const Options& opts, const Context& ctx, std::uint64_t seed) {
    const std::size_t n = ctx.n();
    if (!opts.a.empty()) {
        if (opts.a.size() != n) throw UsageError("--a needs " + std::to_string(n) + " components");
        double s = 0.0;
        for (double v : opts.a) s += v * v;
        if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("--a must be a finite nonzero covector");
        return opts.a;
    }
    if (!opts.seed && ctx.scene().covector) return *ctx.scene().covector;
    return draw_covector(seed, 0, n);
}

void strata_csv(const std::string& dir, Context& ctx, const Strata& strata) {
    std::filesystem::create_directories(dir);
    for (const StratumResult& l : strata.levels) {
        std::vector<CsvRow> rows;
        for (std::size_t i = 0; i < l.points.size(); ++i) rows.push_back({l.points[i].x, l.depth, l.classes[i].type});
        for (const Point& p : l.cloud())
            if (l.dimension > 0) rows.push_back({p, l.depth, classify_point(ctx, p).type});
        write_csv((std::filesystem::path(dir) / ("sigma" + std::to_string(l.depth) + ".csv")).string(), ctx.dim(), rows);
    }
}

Json header(const Options& opts, const model::Scene& sc, const std::string& digest, std::uint64_t seed) {
    Json options{{"seed", seed},
                 {"grid", sc.grid},
                 {"tolerances", {{"residual", sc.tol.residual}, {"rank", sc.tol.rank}, {"gap_ratio", kGapRatio}}},
                 {"exec", opts.serial ? "serial" : "parallel"}};
    if (opts.depth) options["depth"] = *opts.depth;
    if (opts.stratum) options["stratum"] = *opts.stratum;
    if (!opts.a.empty()) options["a"] = opts.a;
    return Json{{"schema_version", "1"},
                {"command", opts.command},
                {"scene",
                 {{"name", sc.name},
                  {"file", std::filesystem::path(opts.scene_path).filename().string()},
                  {"sha256", digest},
                  {"ambient_dim", sc.ambient_dim},
                  {"n", sc.n()},
                  {"codim", sc.codim()},
                  {"mode", sc.mode == model::FrameMode::frame ? "frame" : "coframe"}}},
                {"options", std::move(options)}};
}

}  // namespace

model::Scene prepared_scene(const Options& opts) {
    model::Scene sc = model::parse_scene(read_file(opts.scene_path), opts.scene_path);
    if (opts.tol) {
        if (!(*opts.tol > 0.0)) throw UsageError("--tol must be positive");
        sc.tol.residual *= *opts.tol;
        sc.tol.rank *= *opts.tol;
    }
    if (opts.tol_residual) sc.tol.residual = *opts.tol_residual;
    if (opts.tol_rank) sc.tol.rank = *opts.tol_rank;
    if (!(sc.tol.residual > 0.0) || !(sc.tol.rank > 0.0)) throw UsageError("tolerances must be positive");
    if (opts.grid) {
        if (*opts.grid < 2) throw UsageError("--grid must be at least 2");
        sc.grid = *opts.grid;
    }
    return sc;
}

Outcome execute(const Options& opts) {
    Clock clock;
    const std::string digest = sha256_hex(read_file(opts.scene_path));
    model::Scene sc = prepared_scene(opts);
    const std::size_t n = sc.n();
    const std::uint64_t seed = opts.seed.value_or(sc.rng_seed);
    if (opts.depth && *opts.depth > n) throw UsageError("--depth " + std::to_string(*opts.depth) + " exceeds n = " + std::to_string(n));
    if (opts.stratum && *opts.stratum > n) throw UsageError("--stratum " + std::to_string(*opts.stratum) + " exceeds n = " + std::to_string(n));
    Outcome out;
    out.report = header(opts, sc, digest, seed);
    Context ctx(sc, opts.serial ? solver::Exec::serial : solver::Exec::parallel);
    clock.mark("setup");
    Json results;

    if (opts.command == "check") {
        const std::size_t depth = opts.depth.value_or(sc.depth_limit());
        Strata strata = compute_strata(ctx, depth);
        clock.mark("strata");
        CorankReport corank = check_corank1(ctx, strata, 8);
        MorinReport morin = check_morin(ctx, strata, depth);
        clock.mark("checks");
        Verdict v = combine(corank.verdict, morin.verdict);
        std::string summary = v == Verdict::yes ? "Morin" : v == Verdict::no ? "not Morin" : "inconclusive";
        std::string list;
        for (const auto& l : strata.levels)
            if (!l.empty()) list += (list.empty() ? "" : ", ") + stratum_summary(l);
        summary += ", strata: " + (list.empty() ? std::string("none") : list);
        results = Json{{"verdict", to_string(v)}, {"summary", summary}, {"corank1", corank_json(corank)}, {"morin", morin_json(morin)},
                       {"strata", strata_json(strata)}};
        out.exit_code = exit_for(v);
    } else if (opts.command == "strata") {
        const std::size_t depth = opts.depth.value_or(sc.depth_limit());
        if (depth == 0) throw UsageError("--depth must be at least 1");
        Strata strata = compute_strata(ctx, depth);
        clock.mark("strata");
        if (!opts.csv.empty()) strata_csv(opts.csv, ctx, strata);
        results = strata_json(strata);
    } else if (opts.command == "zeros") {
        std::vector<double> a = covector_for(opts, ctx, seed);
        Strata strata = compute_strata(ctx, n);
        clock.mark("strata");
        ZeroAnalysis z = analyze_zeros(ctx, strata, a);
        clock.mark("zeros");
        Json zeros = Json::array();
        std::vector<CsvRow> rows;
        auto take = [&](const std::vector<ZeroRecord>& v) {
            for (const auto& r : v) {
                zeros.push_back(zero_json(r));
                rows.push_back({r.x, r.depth, r.type});
            }
        };
        if (!opts.stratum || *opts.stratum == 0) take(z.unrestricted);
        for (const auto& [k, v] : z.restricted)
            if (!opts.stratum || *opts.stratum == k) take(v);
        if (opts.stratum && *opts.stratum == n && n >= 1)
            if (const StratumResult* top = strata.at(n))
                for (const auto& p : top->points)
                    if (auto r = zero_at(ctx, p.x, n, a)) {
                        nondegeneracy(ctx, *r, a);
                        r->type = classify_point(ctx, r->x).type;
                        take({*r});
                    }
        if (!opts.csv.empty()) {
            std::filesystem::create_directories(opts.csv);
            write_csv((std::filesystem::path(opts.csv) / "zeros.csv").string(), ctx.dim(), rows);
        }
        const ZeroChecks& c = z.checks;
        bool failed = !c.zeros_on_sigma1 || !c.exclusion || !c.restricted_exclusion || !c.top_forcing || !c.a1_equivalence ||
                      !c.restriction_equivalence;
        bool unsure = false;
        auto scan = [&](const std::vector<ZeroRecord>& v) {
            for (const auto& r : v) {
                failed = failed || r.nondegenerate == Verdict::no;
                unsure = unsure || r.nondegenerate == Verdict::inconclusive;
            }
        };
        scan(z.unrestricted);
        for (const auto& [k, v] : z.restricted) scan(v);
        Json counts = Json::object();
        counts["0"] = z.unrestricted.size();
        for (const auto& [k, v] : z.restricted) counts[std::to_string(k)] = v.size();
        results = Json{{"covector", point_json(a)}, {"zeros", std::move(zeros)}, {"counts", std::move(counts)}, {"checks", zero_checks_json(c)}};
        out.exit_code = failed ? kNotMorin : unsure ? kInconclusive : kOk;
    } else if (opts.command == "euler") {
        Strata strata = compute_strata(ctx, n);
        clock.mark("strata");
        MorinReport morin = check_morin(ctx, strata, n);
        CongruenceReport cr = euler_congruence(ctx, strata, seed);
        clock.mark("euler");
        results = congruence_json(cr);
        results["morin"] = to_string(morin.verdict);
        if (!cr.compactness.ok)
            out.exit_code = kInconclusive;
        else if (morin.verdict == Verdict::no)
            out.exit_code = kNotMorin;
        else if (morin.verdict == Verdict::inconclusive)
            out.exit_code = kInconclusive;
        else
            out.exit_code = exit_for(cr.verdict);
        if (!cr.compactness.ok) results["explanation"] = "compactness surrogate failed: " + cr.compactness.detail;
    } else if (opts.command == "oracle") {
        const std::size_t depth = opts.depth.value_or(1);
        std::vector<Expr> eqs;
        if (!opts.a.empty()) {
            std::vector<double> a = covector_for(opts, ctx, seed);
            eqs = zero_equations(sc, depth, xi_components(sc, a));
            results["covector"] = point_json(a);
        } else {
            eqs = sigma_equations(sc, depth);
        }
        solver::OracleSystem sys(eqs, sc.ambient_dim);
        solver::OracleResult r = solver::grid_oracle(sys, ctx.oracle_options(sc.grid));
        clock.mark("oracle");
        results["depth"] = depth;
        results["equations"] = eqs.size();
        results["oracle"] = oracle_json(r);
        out.exit_code = r.budget_exhausted ? kInconclusive : kOk;
    } else {
        throw UsageError("unknown command " + opts.command);
    }
    out.report["results"] = std::move(results);
    out.report["exit_code"] = out.exit_code;
    if (!opts.no_timings) out.report["timings_ms"] = clock.json();
    return out;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Morin singular strata of coframes on implicit manifolds"};
    app.require_subcommand(1);
    Options opts;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {{"check", "corank-1 and Morin conditions"},
                        {"strata", "singular strata up to a depth"},
                        {"zeros", "zeros of a combination of the coframe on M and on the strata"},
                        {"euler", "mod 2 Euler characteristic congruence"},
                        {"oracle", "grid scan of the chart-free equations at a depth"}};
    for (const Sub& s : subs) {
        CLI::App* c = app.add_subcommand(s.name, s.help);
        c->add_option("scene", opts.scene_path, "scene file")->required();
        c->add_option("--out", opts.out, "write the JSON report here instead of stdout");
        c->add_option("--csv", opts.csv, "directory for point-cloud CSV files");
        c->add_option("--seed", opts.seed, "covector draw seed");
        c->add_option("--tol", opts.tol, "multiplier for all scene tolerances");
        c->add_option("--tol-residual", opts.tol_residual, "residual tolerance");
        c->add_option("--tol-rank", opts.tol_rank, "rank tolerance");
        c->add_option("--grid", opts.grid, "grid resolution per axis");
        c->add_flag("--no-timings", opts.no_timings, "omit timing fields");
        c->add_flag("--serial", opts.serial, "run the serial reference kernels");
        c->add_option("--depth", opts.depth, "stratum depth");
        if (std::string(s.name) == "zeros") c->add_option("--stratum", opts.stratum, "restrict to zeros on Sigma^k (0 for M)");
        if (std::string(s.name) == "zeros" || std::string(s.name) == "oracle")
            c->add_option("--a", opts.a, "covector coefficients")->delimiter(',')->expected(1, -1);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << "\n";
        return kError;
    }
    for (const CLI::App* c : app.get_subcommands()) opts.command = c->get_name();
    try {
        Outcome o = execute(opts);
        std::string text = o.report.dump(2) + "\n";
        if (opts.out.empty()) {
            out << text;
        } else {
            std::ofstream f(opts.out, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + opts.out);
            f << text;
        }
        if (o.exit_code == kInconclusive && o.report["results"].contains("explanation"))
            err << o.report["results"]["explanation"].get<std::string>() << "\n";
        return o.exit_code;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
    } catch (const model::SceneError& e) {
        err << "scene error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kError;
}

}  // namespace morin::cli
