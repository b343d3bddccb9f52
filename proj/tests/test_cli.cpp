#include "morin/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace morin;

namespace {

std::string scene(const std::string& name) { return std::string(MORIN_SCENES) + "/" + name + ".scene"; }

struct Call {
    int code = -1;
    std::string out;
    std::string err;
};

Call call(std::vector<std::string> args) {
    args.insert(args.begin(), "morin");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    Call c;
    c.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    c.out = out.str();
    c.err = err.str();
    return c;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("morin_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("sha256 digest") {
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("error paths exit 1") {
    auto dir = temp_dir("bad");
    std::ofstream(dir / "bad.scene") << "[scene\n";
    CHECK(call({"check", (dir / "bad.scene").string()}).code == 1);
    CHECK(call({"check", (dir / "missing.scene").string()}).code == 1);
    CHECK(call({"check", scene("ex7"), "--bogus"}).code == 1);
    CHECK(call({"frobnicate", scene("ex7")}).code == 1);
    Call z = call({"zeros", scene("torus"), "--stratum", "3"});
    CHECK(z.code == 1);
    CHECK(z.err.find("usage error") != std::string::npos);
    CHECK(call({"zeros", scene("torus"), "--a", "1,2,3"}).code == 1);
    CHECK(call({"zeros", scene("torus"), "--a", "0,0"}).code == 1);
    CHECK(call({"strata", scene("torus"), "--depth", "3"}).code == 1);
}

TEST_CASE("check on ex7") {
    Call c = call({"check", scene("ex7"), "--no-timings"});
    CHECK(c.code == 0);
    auto j = nlohmann::json::parse(c.out);
    CHECK(j["schema_version"] == "1");
    CHECK(j["command"] == "check");
    CHECK(j["results"]["summary"] == "Morin, strata: A1 (curve, 2 components), A2 (2 points)");
    CHECK(j["scene"]["sha256"].get<std::string>().size() == 64);
    CHECK_FALSE(j.contains("timings_ms"));
}

TEST_CASE("timings appear unless disabled") {
    Call c = call({"strata", scene("constant"), "--depth", "1"});
    CHECK(c.code == 0);
    CHECK(nlohmann::json::parse(c.out).contains("timings_ms"));
}

TEST_CASE("strata output is deterministic and writes CSV") {
    auto dir = temp_dir("csv");
    Call a = call({"strata", scene("ex7"), "--depth", "2", "--no-timings", "--csv", dir.string()});
    Call b = call({"strata", scene("ex7"), "--depth", "2", "--no-timings"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    std::ifstream f(dir / "sigma2.csv");
    std::string header, row;
    std::getline(f, header);
    CHECK(header == "x1,x2,x3,depth,type");
    std::size_t rows = 0;
    while (std::getline(f, row)) {
        ++rows;
        CHECK(row.substr(row.size() - 4) == ",2,2");
    }
    CHECK(rows == 2);
    CHECK(std::filesystem::exists(dir / "sigma1.csv"));
}

TEST_CASE("--out writes the report to a file") {
    auto dir = temp_dir("out");
    Call c = call({"strata", scene("constant"), "--depth", "1", "--no-timings", "--out", (dir / "r.json").string()});
    CHECK(c.code == 0);
    CHECK(c.out.empty());
    std::ifstream f(dir / "r.json");
    CHECK(nlohmann::json::parse(f)["command"] == "strata");
}

TEST_CASE("tolerance overrides") {
    cli::Options o;
    o.scene_path = scene("ex7");
    o.tol = 10.0;
    model::Scene s = cli::prepared_scene(o);
    CHECK(s.tol.residual == doctest::Approx(1e-9));
    CHECK(s.tol.rank == doctest::Approx(1e-7));
    o.tol_rank = 1e-6;
    o.grid = 32;
    s = cli::prepared_scene(o);
    CHECK(s.tol.residual == doctest::Approx(1e-9));
    CHECK(s.tol.rank == doctest::Approx(1e-6));
    CHECK(s.grid == 32);
}

TEST_CASE("zeros on sphere W with a given covector") {
    Call c = call({"zeros", scene("sphere_w"), "--stratum", "0", "--a", "1,0", "--no-timings"});
    CHECK(c.code == 0);
    auto j = nlohmann::json::parse(c.out)["results"];
    REQUIRE(j["zeros"].size() == 2);
    for (const auto& z : j["zeros"]) CHECK(z["nondegenerate"] == "yes");
}

TEST_CASE("euler on a non-compact manifold is inconclusive") {
    Call c = call({"euler", scene("ex7"), "--no-timings"});
    CHECK(c.code == 3);
    CHECK(c.err.find("compactness") != std::string::npos);
    auto j = nlohmann::json::parse(c.out)["results"];
    CHECK_FALSE(j["compactness"]["ok"].get<bool>());
}

TEST_CASE("oracle command exposes the grid scan") {
    Call c = call({"oracle", scene("ex7"), "--depth", "2", "--grid", "64", "--no-timings"});
    CHECK(c.code == 0);
    auto j = nlohmann::json::parse(c.out)["results"]["oracle"];
    CHECK(j["clusters"].size() == 2);
}
