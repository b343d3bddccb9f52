#include "morin/expr.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>

namespace morin::expr {

namespace {

std::atomic<std::size_t> g_node_cap{200000};

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
    return (a > std::numeric_limits<std::size_t>::max() - b) ? std::numeric_limits<std::size_t>::max() : a + b;
}

Expr finish(std::shared_ptr<Node> n) {
    std::size_t size = 1;
    std::size_t h = static_cast<std::size_t>(n->op) * 1315423911ULL;
    switch (n->op) {
        case Op::constant:
            h = mix(h, std::hash<double>{}(n->numeric));
            break;
        case Op::variable:
        case Op::pow:
            h = mix(h, n->index);
            break;
        default:
            break;
    }
    for (const Expr& c : n->children) {
        size = saturating_add(size, c.node_count());
        h = mix(h, c.hash());
    }
    n->size = size;
    n->hash = h;
    if (size > g_node_cap.load(std::memory_order_relaxed)) {
        throw NodeCapError("expression exceeds node cap of " + std::to_string(g_node_cap.load()) + " nodes");
    }
    return Expr(std::move(n));
}

Rational rational_pow(const Rational& base, std::size_t k) {
    Rational r = 1;
    Rational b = base;
    while (k) {
        if (k & 1U) r *= b;
        b *= b;
        k >>= 1U;
    }
    return r;
}

}  // namespace

ParseError::ParseError(const std::string& msg, std::size_t pos)
    : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}

void set_node_cap(std::size_t cap) { g_node_cap.store(cap); }
std::size_t node_cap() { return g_node_cap.load(); }

Expr::Expr() : Expr(constant(Rational(0))) {}

Expr Expr::constant(const Rational& v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    n->numeric = v.convert_to<double>();
    return finish(std::move(n));
}

Expr Expr::variable(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->index = index;
    return finish(std::move(n));
}

Expr Expr::unary(Op op, Expr child) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->children.push_back(std::move(child));
    return finish(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return finish(std::move(n));
}

Expr Expr::nary(Op op, std::vector<Expr> children) {
    if (children.size() == 1) return children.front();
    auto n = std::make_shared<Node>();
    n->op = op;
    n->children = std::move(children);
    return finish(std::move(n));
}

Expr Expr::power(Expr base, std::size_t exponent) {
    auto n = std::make_shared<Node>();
    n->op = Op::pow;
    n->index = exponent;
    n->children.push_back(std::move(base));
    return finish(std::move(n));
}

int compare(const Expr& a, const Expr& b) {
    if (a.id() == b.id()) return 0;
    if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
    switch (a.op()) {
        case Op::constant:
            if (a.value() == b.value()) return 0;
            return a.value() < b.value() ? -1 : 1;
        case Op::variable:
            if (a.var_index() == b.var_index()) return 0;
            return a.var_index() < b.var_index() ? -1 : 1;
        case Op::pow:
            if (a.exponent() != b.exponent()) return a.exponent() < b.exponent() ? -1 : 1;
            break;
        default:
            break;
    }
    const auto& ca = a.children();
    const auto& cb = b.children();
    if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        int c = compare(ca[i], cb[i]);
        if (c != 0) return c;
    }
    return 0;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.id() == b.id()) return true;
    if (a.hash() != b.hash() || a.node_count() != b.node_count()) return false;
    return compare(a, b) == 0;
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
    std::vector<Expr> terms;
    if (a.op() == Op::add) terms = a.children(); else terms.push_back(a);
    if (b.op() == Op::add) terms.insert(terms.end(), b.children().begin(), b.children().end());
    else terms.push_back(b);
    return Expr::nary(Op::add, std::move(terms));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
    if (structurally_equal(a, b)) return Expr::constant(0L);
    return Expr::binary(Op::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr::constant(0L);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
    if (a.is_constant() && a.value() == -1) return -b;
    if (b.is_constant() && b.value() == -1) return -a;
    std::vector<Expr> factors;
    if (a.op() == Op::mul) factors = a.children(); else factors.push_back(a);
    if (b.op() == Op::mul) factors.insert(factors.end(), b.children().begin(), b.children().end());
    else factors.push_back(b);
    return Expr::nary(Op::mul, std::move(factors));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_zero()) return a;
    if (b.is_one()) return a;
    if (a.is_constant() && b.is_constant() && b.value() != 0) return Expr::constant(a.value() / b.value());
    return Expr::binary(Op::div, a, b);
}

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    if (a.op() == Op::neg) return a.child(0);
    return Expr::unary(Op::neg, a);
}

Expr pow(const Expr& base, std::size_t exponent) {
    if (exponent == 0) return Expr::constant(1L);
    if (exponent == 1) return base;
    if (base.is_constant()) return Expr::constant(rational_pow(base.value(), exponent));
    return Expr::power(base, exponent);
}

Expr sum(const std::vector<Expr>& terms) {
    Expr acc = Expr::constant(0L);
    for (const Expr& t : terms) acc = acc + t;
    return acc;
}

std::size_t variable_span(const Expr& e) {
    if (e.op() == Op::variable) return e.var_index() + 1;
    std::size_t s = 0;
    for (const Expr& c : e.children()) s = std::max(s, variable_span(c));
    return s;
}

double evaluate(const Expr& e, std::span<const double> point) {
    switch (e.op()) {
        case Op::constant:
            return e.numeric();
        case Op::variable:
            if (e.var_index() >= point.size()) throw DomainError("variable index out of range");
            return point[e.var_index()];
        case Op::neg:
            return -evaluate(e.child(0), point);
        case Op::add: {
            double s = 0.0;
            for (const Expr& c : e.children()) s += evaluate(c, point);
            return s;
        }
        case Op::sub:
            return evaluate(e.child(0), point) - evaluate(e.child(1), point);
        case Op::mul: {
            double p = 1.0;
            for (const Expr& c : e.children()) p *= evaluate(c, point);
            return p;
        }
        case Op::div: {
            double den = evaluate(e.child(1), point);
            if (den == 0.0) throw DomainError("division by zero");
            double v = evaluate(e.child(0), point) / den;
            if (!std::isfinite(v)) throw DomainError("non-finite quotient");
            return v;
        }
        case Op::pow: {
            double b = evaluate(e.child(0), point);
            double r = 1.0;
            for (std::size_t k = e.exponent(); k; k >>= 1U) {
                if (k & 1U) r *= b;
                b *= b;
            }
            if (!std::isfinite(r)) throw DomainError("non-finite power");
            return r;
        }
        case Op::sqrt: {
            double v = evaluate(e.child(0), point);
            if (v < 0.0) throw DomainError("sqrt of negative value");
            return std::sqrt(v);
        }
        case Op::sin:
            return std::sin(evaluate(e.child(0), point));
        case Op::cos:
            return std::cos(evaluate(e.child(0), point));
        case Op::exp: {
            double v = std::exp(evaluate(e.child(0), point));
            if (!std::isfinite(v)) throw DomainError("exp overflow");
            return v;
        }
        case Op::log: {
            double v = evaluate(e.child(0), point);
            if (v <= 0.0) throw DomainError("log of non-positive value");
            return std::log(v);
        }
    }
    throw DomainError("unknown node kind");
}

}  // namespace morin::expr
