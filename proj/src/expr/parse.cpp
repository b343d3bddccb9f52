#include "morin/expr.hpp"

#include <array>
#include <cctype>
#include <sstream>

namespace morin::expr {

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
    Tok kind = Tok::end;
    std::size_t pos = 0;
    std::string text;
    Rational value;
    bool integer = false;
};

constexpr std::array<std::string_view, 5> kFunctions{"sqrt", "sin", "cos", "exp", "log"};
constexpr std::array<std::string_view, 8> kNonsmooth{"abs", "sign", "sgn", "floor", "ceil", "max", "min", "heaviside"};

Op function_op(std::string_view name) {
    if (name == "sqrt") return Op::sqrt;
    if (name == "sin") return Op::sin;
    if (name == "cos") return Op::cos;
    if (name == "exp") return Op::exp;
    return Op::log;
}

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) {}

    Token next() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        Token t;
        t.pos = i_;
        if (i_ >= s_.size()) return t;
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
            return number(t);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t b = i_;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
            t.kind = Tok::ident;
            t.text = std::string(s_.substr(b, i_ - b));
            return t;
        }
        ++i_;
        switch (c) {
            case '+': t.kind = Tok::plus; return t;
            case '-': t.kind = Tok::minus; return t;
            case '*': t.kind = Tok::star; return t;
            case '/': t.kind = Tok::slash; return t;
            case '^': t.kind = Tok::caret; return t;
            case '(': t.kind = Tok::lparen; return t;
            case ')': t.kind = Tok::rparen; return t;
            default: break;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", t.pos);
    }

private:
    bool digit_at(std::size_t k) const { return k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k])); }

    Token number(Token t) {
        std::string mant;
        std::size_t frac_digits = 0;
        bool integer = true;
        while (digit_at(i_)) mant += s_[i_++];
        if (i_ < s_.size() && s_[i_] == '.') {
            integer = false;
            ++i_;
            while (digit_at(i_)) {
                mant += s_[i_++];
                ++frac_digits;
            }
        }
        long exp10 = 0;
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
            std::size_t k = i_ + 1;
            bool neg = false;
            if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) {
                neg = s_[k] == '-';
                ++k;
            }
            if (!digit_at(k)) throw ParseError("malformed exponent in number", i_);
            integer = false;
            i_ = k;
            std::string e;
            while (digit_at(i_)) e += s_[i_++];
            if (e.size() > 4) throw ParseError("number exponent too large", t.pos);
            exp10 = std::stol(e) * (neg ? -1 : 1);
        }
        if (mant.empty()) mant = "0";
        boost::multiprecision::cpp_int num(mant);
        exp10 -= static_cast<long>(frac_digits);
        boost::multiprecision::cpp_int scale = boost::multiprecision::pow(boost::multiprecision::cpp_int(10), static_cast<unsigned>(exp10 < 0 ? -exp10 : exp10));
        Rational v = exp10 < 0 ? Rational(num, scale) : Rational(num * scale);
        if (integer && i_ + 1 < s_.size() && s_[i_] == '/' && digit_at(i_ + 1)) {
            ++i_;
            std::string den;
            while (digit_at(i_)) den += s_[i_++];
            boost::multiprecision::cpp_int d(den);
            if (d == 0) throw ParseError("zero denominator in rational literal", t.pos);
            v = Rational(num, d);
            integer = false;
        }
        t.kind = Tok::number;
        t.value = v;
        t.integer = integer;
        return t;
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> vars, const Definitions* defs)
        : lex_(text), vars_(vars), defs_(defs) {
        advance();
    }

    Expr run() {
        Expr e = expression();
        if (tok_.kind != Tok::end) throw ParseError("unexpected trailing input", tok_.pos);
        return e;
    }

private:
    void advance() { tok_ = lex_.next(); }

    void expect(Tok k, const char* what) {
        if (tok_.kind != k) throw ParseError(std::string("expected ") + what, tok_.pos);
        advance();
    }

    // Consecutive operators of the same kind fold into one n-ary node.
    Expr fold(Op nary_op, Op binary_op, Tok nary_tok, Tok binary_tok, Expr (Parser::*operand)()) {
        std::vector<Expr> run{(this->*operand)()};
        while (tok_.kind == nary_tok || tok_.kind == binary_tok) {
            Tok k = tok_.kind;
            advance();
            Expr rhs = (this->*operand)();
            if (k == nary_tok) {
                run.push_back(rhs);
            } else {
                Expr lhs = run.size() == 1 ? run.front() : Expr::nary(nary_op, run);
                run = {Expr::binary(binary_op, lhs, rhs)};
            }
        }
        return run.size() == 1 ? run.front() : Expr::nary(nary_op, run);
    }

    Expr expression() { return fold(Op::add, Op::sub, Tok::plus, Tok::minus, &Parser::term); }
    Expr term() { return fold(Op::mul, Op::div, Tok::star, Tok::slash, &Parser::factor); }

    Expr factor() {
        Expr b = base();
        if (tok_.kind == Tok::caret) {
            advance();
            if (tok_.kind != Tok::number || !tok_.integer) throw ParseError("exponent after '^' must be an unsigned integer", tok_.pos);
            if (tok_.value > 1000) throw ParseError("exponent too large", tok_.pos);
            auto k = static_cast<std::size_t>(numerator(tok_.value));
            advance();
            return Expr::power(b, k);
        }
        return b;
    }

    Expr base() {
        Token t = tok_;
        switch (t.kind) {
            case Tok::number:
                advance();
                return Expr::constant(t.value);
            case Tok::minus: {
                advance();
                Expr inner = base();
                if (inner.is_constant()) return Expr::constant(-inner.value());
                return Expr::unary(Op::neg, inner);
            }
            case Tok::lparen: {
                advance();
                Expr inner = expression();
                expect(Tok::rparen, "')'");
                return inner;
            }
            case Tok::ident:
                advance();
                return identifier(t);
            default:
                break;
        }
        throw ParseError(t.kind == Tok::end ? "unexpected end of input" : "unexpected token", t.pos);
    }

    Expr identifier(const Token& t) {
        if (tok_.kind == Tok::lparen) {
            for (auto bad : kNonsmooth) {
                if (t.text == bad) throw ParseError("nonsmooth function '" + t.text + "' is not supported", t.pos);
            }
            bool known = false;
            for (auto f : kFunctions) known = known || t.text == f;
            if (!known) throw ParseError("unknown function '" + t.text + "'", t.pos);
            advance();
            Expr arg = expression();
            expect(Tok::rparen, "')'");
            return Expr::unary(function_op(t.text), arg);
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == t.text) return Expr::variable(i);
        }
        if (defs_ != nullptr) {
            auto it = defs_->find(t.text);
            if (it != defs_->end()) return it->second;
        }
        throw ParseError("unknown identifier '" + t.text + "'", t.pos);
    }

    Lexer lex_;
    Token tok_;
    std::span<const std::string> vars_;
    const Definitions* defs_;
};

std::string rational_text(const Rational& v) {
    std::ostringstream os;
    os << numerator(v);
    if (denominator(v) != 1) os << '/' << denominator(v);
    return os.str();
}

bool negative_leaf(const Expr& e) {
    return e.op() == Op::neg || (e.is_constant() && e.value() < 0);
}

const char* function_name(Op op) {
    switch (op) {
        case Op::sqrt: return "sqrt";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::exp: return "exp";
        default: return "log";
    }
}

class Printer {
public:
    explicit Printer(std::span<const std::string> vars) : vars_(vars) {}

    void print(const Expr& e, std::ostream& os) const {
        switch (e.op()) {
            case Op::constant:
                os << rational_text(e.value());
                return;
            case Op::variable:
                if (e.var_index() < vars_.size()) os << vars_[e.var_index()];
                else os << "_v" << e.var_index();
                return;
            case Op::neg: {
                const Expr& c = e.child(0);
                bool bare = c.op() == Op::variable || is_function(c.op()) || (c.is_constant() && c.value() >= 0 && denominator(c.value()) == 1);
                os << '-';
                wrap(c, os, !bare);
                return;
            }
            case Op::add:
                for (std::size_t i = 0; i < e.children().size(); ++i) {
                    const Expr& c = e.children()[i];
                    if (i) os << " + ";
                    bool paren = c.op() == Op::add || (i > 0 && (c.op() == Op::sub || negative_leaf(c)));
                    wrap(c, os, paren);
                }
                return;
            case Op::sub:
                wrap(e.child(0), os, false);
                os << " - ";
                wrap(e.child(1), os, is_sum(e.child(1)) || negative_leaf(e.child(1)));
                return;
            case Op::mul:
                for (std::size_t i = 0; i < e.children().size(); ++i) {
                    const Expr& c = e.children()[i];
                    if (i) os << '*';
                    bool paren = is_sum(c) || c.op() == Op::mul || (i > 0 && (c.op() == Op::div || negative_leaf(c)));
                    wrap(c, os, paren);
                }
                return;
            case Op::div:
                wrap(e.child(0), os, is_sum(e.child(0)));
                os << " / ";
                wrap(e.child(1), os, is_sum(e.child(1)) || is_product(e.child(1)) || negative_leaf(e.child(1)));
                return;
            case Op::pow: {
                const Expr& b = e.child(0);
                bool bare = b.op() == Op::variable || is_function(b.op()) || (b.is_constant() && b.value() >= 0 && denominator(b.value()) == 1);
                wrap(b, os, !bare);
                os << '^' << e.exponent();
                return;
            }
            default:
                os << function_name(e.op()) << '(';
                print(e.child(0), os);
                os << ')';
                return;
        }
    }

private:
    static bool is_function(Op op) { return op >= Op::sqrt; }
    static bool is_sum(const Expr& e) { return e.op() == Op::add || e.op() == Op::sub; }
    static bool is_product(const Expr& e) { return e.op() == Op::mul || e.op() == Op::div; }

    void wrap(const Expr& e, std::ostream& os, bool paren) const {
        if (paren) os << '(';
        print(e, os);
        if (paren) os << ')';
    }

    std::span<const std::string> vars_;
};

}  // namespace

Expr parse_expr(std::string_view text, std::span<const std::string> vars, const Definitions* definitions) {
    return Parser(text, vars, definitions).run();
}

std::string to_string(const Expr& e, std::span<const std::string> vars) {
    std::ostringstream os;
    Printer(vars).print(e, os);
    return os.str();
}

}  // namespace morin::expr
