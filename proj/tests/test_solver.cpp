#include "morin/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace morin;
using namespace morin::solver;

namespace {

const std::vector<std::string> kVars{"x1", "x2", "x3"};

Expr P(const std::string& s) { return expr::parse_expr(s, kVars); }

SolveOptions cube(double r) {
    SolveOptions o;
    o.box = {{-r, r}, {-r, r}, {-r, r}};
    return o;
}

double distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("two isolated points") {
    ExprEquations eq({P("x1^2 - 1"), P("x2 - 2*x1"), P("x3")}, 3);
    SolveOptions o = cube(5);
    std::vector<SolvedPoint> pts = solve_from_seeds(eq, grid_points(o.box, 6), o);
    REQUIRE(pts.size() == 2);
    CHECK(distance(pts[0].x, {-1, -2, 0}) < 1e-8);
    CHECK(distance(pts[1].x, {1, 2, 0}) < 1e-8);
    CHECK(pts[0].jacobian_rank.rank == 3);
}

TEST_CASE("inconsistent system has no solutions") {
    ExprEquations eq({P("x1^2 + x2^2 + x3^2 + 1")}, 3);
    SolveOptions o = cube(2);
    CHECK(solve_from_seeds(eq, grid_points(o.box, 4), o).empty());
}

TEST_CASE("audit rejects points off the audit set") {
    ExprEquations eq({P("x1^2 - 1"), P("x2"), P("x3")}, 3, {P("x1 - 1")});
    SolveOptions o = cube(2);
    std::vector<SolvedPoint> pts = solve_from_seeds(eq, grid_points(o.box, 4), o);
    REQUIRE(pts.size() == 1);
    CHECK(distance(pts[0].x, {1, 0, 0}) < 1e-8);
}

TEST_CASE("circle traces to one closed component") {
    ExprEquations eq({P("x1^2 + x2^2 - 1"), P("x3")}, 3);
    SolveOptions o = cube(2);
    std::vector<CurveComponent> cs = trace_curves(eq, grid_points(o.box, 5), o);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].closed);
    CHECK(cs[0].complete);
    CHECK(cs[0].arc_length == doctest::Approx(2 * M_PI).epsilon(1e-3));
    for (const Point& p : cs[0].points) CHECK(std::abs(std::hypot(p[0], p[1]) - 1) < 1e-8);
}

TEST_CASE("two circles trace to two components; a line leaves the box") {
    ExprEquations rings({P("(x1^2 + x2^2 - 1)*(x1^2 + x2^2 - 4)"), P("x3")}, 3);
    SolveOptions o = cube(3);
    std::vector<CurveComponent> cs = trace_curves(rings, grid_points(o.box, 7), o);
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].closed);
    CHECK(cs[1].closed);

    ExprEquations line({P("x1 - x2"), P("x3")}, 3);
    cs = trace_curves(line, grid_points(o.box, 3), o);
    REQUIRE(cs.size() == 1);
    CHECK_FALSE(cs[0].closed);
    CHECK(cs[0].arc_length == doctest::Approx(6 * std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("serial and parallel kernels agree exactly") {
    ExprEquations eq({P("x1^2 + x2^2 + x3^2 - 1"), P("x1*x2 - x3")}, 3);
    SolveOptions o = cube(2);
    std::vector<Point> seeds = grid_points(o.box, 6);
    auto a = newton_batch(eq, seeds, o, Exec::serial);
    auto b = newton_batch(eq, seeds, o, Exec::parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].converged == b[i].converged);
    }
    OracleSystem sys({P("x1^2 + x2^2 + x3^2 - 1")}, 3);
    std::vector<double> sa, sb;
    CHECK(cell_test_batch(sys, seeds, 0.3, sa, Exec::serial) == cell_test_batch(sys, seeds, 0.3, sb, Exec::parallel));
    CHECK(sa == sb);
}

TEST_CASE("grid oracle isolates points and curves") {
    OracleOptions o;
    o.box = {{-5, 5}, {-5, 5}, {-5, 5}};
    o.grid = 64;
    o.refine_levels = 8;
    OracleSystem pts({P("x1^2 - 1"), P("x2 - 2*x1"), P("x3")}, 3);
    OracleResult r = grid_oracle(pts, o);
    CHECK_FALSE(r.budget_exhausted);
    REQUIRE(r.clusters.size() == 2);
    CHECK(r.clusters[0].point_like);
    CHECK(distance(r.clusters[0].centroid, {-1, -2, 0}) < 1e-3);
    CHECK(distance(r.clusters[1].centroid, {1, 2, 0}) < 1e-3);

    OracleSystem circle({P("x1^2 + x2^2 - 4"), P("x3")}, 3);
    r = grid_oracle(circle, o);
    REQUIRE(r.clusters.size() == 1);
    CHECK_FALSE(r.clusters[0].point_like);
    for (const Point& m : r.clusters[0].members) CHECK(std::abs(std::hypot(m[0], m[1]) - 2) < 0.4);
}

TEST_CASE("distance to polyline") {
    std::vector<Point> poly{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
    CHECK(distance_to_polyline(poly, std::vector<double>{0.5, 0.5, 0}) == doctest::Approx(0.5));
    CHECK(distance_to_polyline(poly, std::vector<double>{2, 2, 0}) == doctest::Approx(std::sqrt(2.0)));
}
