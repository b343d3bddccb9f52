#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace morin::expr {

using Rational = boost::multiprecision::cpp_rational;

enum class Op : std::uint8_t { constant, variable, neg, add, sub, mul, div, pow, sqrt, sin, cos, exp, log };

class Expr;

struct Node {
    Op op = Op::constant;
    Rational value;          // constant only
    double numeric = 0.0;    // constant only, converted once
    std::size_t index = 0;   // variable index, or exponent for pow
    std::vector<Expr> children;
    std::size_t size = 1;    // tree node count, saturating
    std::size_t hash = 0;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos);
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NodeCapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Expr {
public:
    Expr();
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    static Expr constant(const Rational& v);
    static Expr constant(long v) { return constant(Rational(v)); }
    static Expr variable(std::size_t index);
    static Expr unary(Op op, Expr child);
    static Expr binary(Op op, Expr lhs, Expr rhs);
    static Expr nary(Op op, std::vector<Expr> children);
    static Expr power(Expr base, std::size_t exponent);

    Op op() const { return node_->op; }
    const std::vector<Expr>& children() const { return node_->children; }
    const Expr& child(std::size_t i) const { return node_->children[i]; }
    const Rational& value() const { return node_->value; }
    double numeric() const { return node_->numeric; }
    std::size_t var_index() const { return node_->index; }
    std::size_t exponent() const { return node_->index; }
    std::size_t node_count() const { return node_->size; }
    std::size_t hash() const { return node_->hash; }
    const Node* id() const { return node_.get(); }

    bool is_constant() const { return op() == Op::constant; }
    bool is_zero() const { return is_constant() && value() == 0; }
    bool is_one() const { return is_constant() && value() == 1; }

private:
    std::shared_ptr<const Node> node_;
};

// Light-folding builders used by differentiation and assembly code.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, std::size_t exponent);
Expr sum(const std::vector<Expr>& terms);

bool structurally_equal(const Expr& a, const Expr& b);
int compare(const Expr& a, const Expr& b);

void set_node_cap(std::size_t cap);
std::size_t node_cap();

// Named sub-expressions available to the parser, substituted on use.
using Definitions = std::map<std::string, Expr, std::less<>>;

Expr parse_expr(std::string_view text, std::span<const std::string> vars,
                const Definitions* definitions = nullptr);
std::string to_string(const Expr& e, std::span<const std::string> vars);

Expr differentiate(const Expr& e, std::size_t var_index);
std::vector<Expr> gradient(const Expr& e, std::size_t dim);
double evaluate(const Expr& e, std::span<const double> point);
Expr simplify(const Expr& e);
Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m);

// Largest variable index referenced plus one (0 for constants).
std::size_t variable_span(const Expr& e);

}  // namespace morin::expr
