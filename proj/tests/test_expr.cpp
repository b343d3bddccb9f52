#include "morin/expr.hpp"
#include "morin/tape.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace morin::expr;

namespace {

const std::vector<std::string> kVars{"x1", "x2", "x3"};

Expr P(const std::string& s) { return parse_expr(s, kVars); }

double at(const Expr& e, double a, double b, double c) {
    std::vector<double> p{a, b, c};
    return evaluate(e, p);
}

double central_difference(const Expr& e, std::vector<double> p, std::size_t j, double h = 1e-6) {
    std::vector<double> q = p;
    p[j] += h;
    q[j] -= h;
    return (evaluate(e, p) - evaluate(e, q)) / (2 * h);
}

// Leibniz expansion, independent of any library routine.
double leibniz_det(const std::vector<std::vector<double>>& m) {
    std::size_t n = m.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
        double prod = inversions % 2 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) prod *= m[i][perm[i]];
        total += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

std::vector<std::vector<double>> random_points(std::size_t count, double lo, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < count; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    return pts;
}

const std::vector<std::string> kSamples{
    "x1^2 - x1*x2 + x3^2",
    "(sqrt(x2^2+x3^2)-2)^2+(x1+x2)^2",
    "x1*x2*x3 - 3/4*x1^3 + 2.5*x2",
    "sin(x1)*cos(x2) + exp(x3/4)",
    "log(x1^2 + 1) - x2/(x3^2 + 2)",
    "(x1 - x2)^3*(x1 + 2*x3)^2",
    "-x1^2 - (x2 - x3)*(x2 + x3)",
};

}  // namespace

TEST_CASE("parse follows left-associative precedence") {
    Expr e = P("x1^2 - x1*x2 + x3^2");
    CHECK(e.op() == Op::add);
    REQUIRE(e.children().size() == 2);
    CHECK(e.child(0).op() == Op::sub);
    CHECK(e.child(0).child(0).op() == Op::pow);
    CHECK(e.child(0).child(1).op() == Op::mul);
    CHECK(P("x1 - x2 - x3").child(0).op() == Op::sub);
    CHECK(P("x1 + x2 + x3").children().size() == 3);
}

TEST_CASE("parse constants and literals") {
    Expr z = P("0");
    CHECK(z.is_zero());
    CHECK(P("3/4").value() == Rational(3, 4));
    CHECK(P("-3").value() == -3);
    CHECK(P("2.5e-1").value() == Rational(1, 4));
    CHECK(P("3 / 4").op() == Op::div);
    CHECK(at(P("1/2*x1"), 4, 0, 0) == doctest::Approx(2));
}

TEST_CASE("evaluate torus function") {
    Expr f = P("(sqrt(x2^2+x3^2)-2)^2+(x1+x2)^2");
    CHECK(at(f, 0, 3, 0) == doctest::Approx(10));
    CHECK(at(f, 3, -3, 0) == doctest::Approx(1));
    CHECK(at(P("2*x1 - x2"), 1, 2, 0) == 0.0);
    CHECK(at(P("x1"), 0.25, 7, 9) == 0.25);
}

TEST_CASE("parse errors carry positions") {
    auto fails_at = [](const std::string& s, std::size_t pos) {
        try {
            P(s);
        } catch (const ParseError& e) {
            CHECK(e.position() == pos);
            return true;
        }
        return false;
    };
    CHECK(fails_at("x1 + ", 5));
    CHECK(fails_at("abs(x1)", 0));
    CHECK(fails_at("x1^2.5", 3));
    CHECK(fails_at("x1^-2", 3));
    CHECK(fails_at("x1 + y", 5));
    CHECK(fails_at("foo(x1)", 0));
    CHECK(fails_at("(x1", 3));
    CHECK(fails_at("x1 $ 2", 3));
}

TEST_CASE("print then parse is structurally stable") {
    std::vector<std::string> extra{"-x1^2", "-(x1^2)", "x1 - (x2 - x3)", "(x1 + x2) + x3", "x1/(x2*x3)",
                                   "x1*(x2/x3)", "(x1/x2)/x3", "-3^2", "x1 - -x2", "2*-x1", "sqrt(-x1 + 2)^3",
                                   "(1/2)^2", "x1*x2*(x3*x1)", "-(-x1)", "x1 + (-2)"};
    std::vector<std::string> all = kSamples;
    all.insert(all.end(), extra.begin(), extra.end());
    for (const auto& s : all) {
        Expr e = P(s);
        std::string printed = to_string(e, kVars);
        Expr again = P(printed);
        INFO(s << " -> " << printed);
        CHECK(structurally_equal(e, again));
        CHECK(to_string(again, kVars) == printed);
    }
}

TEST_CASE("grammar binds unary minus inside powers") {
    CHECK(at(P("-x1^2"), 3, 0, 0) == doctest::Approx(9));
    CHECK(at(P("-(x1^2)"), 3, 0, 0) == doctest::Approx(-9));
}

TEST_CASE("differentiate examples") {
    CHECK(to_string(differentiate(P("x1^2 - x1*x2 + x3^2"), 0), kVars) == "2*x1 - x2");
    CHECK(differentiate(P("7"), 1).is_zero());
    Expr g = differentiate(P("(sqrt(x2^2+x3^2)-2)^2"), 2);
    CHECK(at(g, 0, 0, 3) == doctest::Approx(2).epsilon(1e-12));
    double fd = central_difference(P("(sqrt(x2^2+x3^2)-2)^2"), {0, 0, 3}, 2);
    CHECK(std::abs(fd - 2) <= 1e-6 * 2);
}

TEST_CASE("evaluation reports domain errors") {
    CHECK_THROWS_AS(at(P("sqrt(x1)"), -1, 0, 0), DomainError);
    CHECK_THROWS_AS(at(P("1/x1"), 0, 0, 0), DomainError);
    CHECK_THROWS_AS(at(P("log(x1)"), 0, 0, 0), DomainError);
    CHECK_THROWS_AS(at(P("exp(x1)"), 1e6, 0, 0), DomainError);
}

TEST_CASE("derivatives agree with central differences") {
    auto pts = random_points(100, -2, 2, 7);
    for (const auto& s : kSamples) {
        Expr e = P(s);
        for (std::size_t j = 0; j < 3; ++j) {
            Expr d = differentiate(e, j);
            for (const auto& p : pts) {
                double sym = evaluate(d, p);
                double fd = central_difference(e, p, j);
                INFO(s << " d/dx" << j + 1);
                CHECK(std::abs(sym - fd) <= 1e-5 * std::max(1.0, std::abs(sym)));
            }
        }
    }
}

TEST_CASE("differentiation is linear") {
    Expr a = P(kSamples[1]);
    Expr b = P(kSamples[3]);
    Expr combo = Expr::constant(Rational(3, 2)) * a - Expr::constant(2L) * b;
    auto pts = random_points(50, -2, 2, 11);
    for (std::size_t j = 0; j < 3; ++j) {
        Expr lhs = differentiate(combo, j);
        Expr da = differentiate(a, j);
        Expr db = differentiate(b, j);
        for (const auto& p : pts) {
            double l = evaluate(lhs, p);
            double r = 1.5 * evaluate(da, p) - 2 * evaluate(db, p);
            CHECK(std::abs(l - r) <= 1e-12 * (1 + std::abs(l)));
        }
    }
}

TEST_CASE("simplify examples") {
    CHECK(to_string(simplify(P("0*x1 + x2")), kVars) == "x2");
    CHECK(simplify(P("x1*x2 - x2*x1")).is_zero());
    CHECK(to_string(simplify(P("2*x1 + 3 - x1 - 3")), kVars) == "x1");
    CHECK(simplify(P("sqrt(x1^2+1)^2 - x1^2")).is_one());
    CHECK(simplify(P("sqrt(4/9)")).value() == Rational(2, 3));
}

TEST_CASE("simplify preserves values, never grows, and is idempotent") {
    std::vector<std::string> exprs = kSamples;
    exprs.push_back("(x1 + x2)*(x1 - x2) - x1^2 + x2^2 + x3");
    exprs.push_back("x1*(x2 + 0*x3) + 1*x2*x1 - (x1 + x2)^2");
    auto pts = random_points(100, -2, 2, 3);
    for (const auto& s : exprs) {
        Expr e = P(s);
        std::vector<Expr> cases{e, differentiate(e, 0), differentiate(differentiate(e, 1), 2)};
        for (const Expr& c : cases) {
            Expr s1 = simplify(c);
            CHECK(s1.node_count() <= c.node_count());
            CHECK(structurally_equal(simplify(s1), s1));
            for (const auto& p : pts) {
                double v = evaluate(c, p);
                CHECK(std::abs(v - evaluate(s1, p)) <= 1e-12 * (1 + std::abs(v)));
            }
        }
    }
}

TEST_CASE("symbolic determinant examples") {
    Expr f = P("x1^2 - x1*x2 + x3^2");
    auto gf = gradient(f, 3);
    auto gfx = gradient(differentiate(f, 0), 3);
    std::vector<std::vector<Expr>> m{gf, gfx, {Expr::constant(1L), Expr::constant(0L), Expr::constant(0L)}};
    Expr det = symbolic_determinant(m);
    for (const auto& p : random_points(20, -3, 3, 5)) CHECK(std::abs(std::abs(evaluate(det, p)) - std::abs(2 * p[2])) <= 1e-12);

    CHECK(to_string(symbolic_determinant({{P("x1")}}), kVars) == "x1");
    std::vector<std::vector<Expr>> num{{P("1"), P("2")}, {P("3"), P("4")}};
    CHECK(symbolic_determinant(num).value() == -2);
    CHECK_THROWS(symbolic_determinant({{P("1"), P("2")}}));
}

TEST_CASE("torus bordering determinant matches the closed form") {
    Expr f = P("(sqrt(x2^2+x3^2)-2)^2+(x1+x2)^2");
    std::vector<std::vector<Expr>> m{gradient(f, 3), gradient(differentiate(f, 0), 3),
                                     {Expr::constant(1L), Expr::constant(0L), Expr::constant(0L)}};
    Expr det = symbolic_determinant(m);
    for (const auto& p : random_points(100, -3, 3, 9)) {
        double rho = std::hypot(p[1], p[2]);
        // f_x2 f_x1x3 - f_x3 f_x1x2 with f_x1x3 = 0, f_x1x2 = 2, f_x3 = 2 (rho - 2) x3 / rho
        double closed = -4 * p[2] * (rho - 2) / rho;
        CHECK(std::abs(evaluate(det, p) - closed) <= 1e-10 * (1 + std::abs(closed)));
    }
}

TEST_CASE("symbolic determinant matches numeric determinant") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(kSamples.size()) - 1);
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<std::vector<Expr>> m(n);
        for (auto& row : m)
            for (std::size_t j = 0; j < n; ++j) row.push_back(P(kSamples[pick(rng)]));
        Expr det = symbolic_determinant(m);
        for (const auto& p : random_points(20, 0.2, 1.5, 100 + n)) {
            std::vector<std::vector<double>> v(n, std::vector<double>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) v[i][j] = evaluate(m[i][j], p);
            double expected = leibniz_det(v);
            CHECK(std::abs(evaluate(det, p) - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("node cap fails loudly") {
    std::size_t old = node_cap();
    set_node_cap(20);
    CHECK_THROWS_AS(P("(x1+x2+x3)*(x1-x2)*(x2-x3)*(x3-x1)*(x1+1)*(x2+2)*(x3+3)*(x1*x2*x3+4)*(x1^2+x2^2+x3^2+5)"),
                    NodeCapError);
    set_node_cap(old);
}

TEST_CASE("tape agrees with tree evaluation and flags domain errors") {
    std::vector<Expr> outs;
    for (const auto& s : kSamples) outs.push_back(P(s));
    for (const auto& s : kSamples) outs.push_back(differentiate(P(s), 1));
    Tape tape(outs);
    std::vector<double> out(outs.size());
    std::vector<double> work;
    for (const auto& p : random_points(30, 0.1, 2, 21)) {
        REQUIRE(tape.evaluate(p, out, work));
        for (std::size_t k = 0; k < outs.size(); ++k) CHECK(out[k] == evaluate(outs[k], p));
    }
    Tape bad(std::vector<Expr>{P("sqrt(x1)"), P("1/x2")});
    std::vector<double> o2(2);
    CHECK_FALSE(bad.evaluate(std::vector<double>{-1, 1, 0}, o2, work));
    CHECK_FALSE(bad.evaluate(std::vector<double>{1, 0, 0}, o2, work));
    CHECK(bad.evaluate(std::vector<double>{4, 2, 0}, o2, work));
    CHECK(o2[0] == 2.0);
}
