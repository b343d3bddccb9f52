#include "morin/expr.hpp"

#include <optional>
#include <unordered_map>

namespace morin::expr {

namespace {

constexpr std::size_t kTermBudget = 4000;

using Factor = std::pair<Expr, std::size_t>;

struct Monomial {
    std::vector<Factor> factors;
    std::size_t degree = 0;
};

struct MonomialLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        if (a.degree != b.degree) return a.degree > b.degree;
        std::size_t n = std::min(a.factors.size(), b.factors.size());
        for (std::size_t i = 0; i < n; ++i) {
            int c = compare(a.factors[i].first, b.factors[i].first);
            if (c != 0) return c < 0;
            if (a.factors[i].second != b.factors[i].second) return a.factors[i].second > b.factors[i].second;
        }
        return a.factors.size() < b.factors.size();
    }
};

using Poly = std::map<Monomial, Rational, MonomialLess>;
using PolyPtr = std::shared_ptr<const Poly>;

Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.degree = a.degree + b.degree;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.factors.size() || j < b.factors.size()) {
        if (j == b.factors.size()) {
            r.factors.push_back(a.factors[i++]);
        } else if (i == a.factors.size()) {
            r.factors.push_back(b.factors[j++]);
        } else {
            int c = compare(a.factors[i].first, b.factors[j].first);
            if (c < 0) {
                r.factors.push_back(a.factors[i++]);
            } else if (c > 0) {
                r.factors.push_back(b.factors[j++]);
            } else {
                r.factors.emplace_back(a.factors[i].first, a.factors[i].second + b.factors[j].second);
                ++i;
                ++j;
            }
        }
    }
    return r;
}

void accumulate(Poly& p, const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = p.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) p.erase(it);
    }
}

Poly constant_poly(const Rational& v) {
    Poly p;
    accumulate(p, Monomial{}, v);
    return p;
}

Poly atom_poly(const Expr& e) {
    Poly p;
    p.emplace(Monomial{{{e, 1}}, 1}, Rational(1));
    return p;
}

bool exact_sqrt(const Rational& v, Rational& out) {
    if (v < 0) return false;
    auto n = numerator(v);
    auto d = denominator(v);
    auto rn = boost::multiprecision::sqrt(n);
    auto rd = boost::multiprecision::sqrt(d);
    if (rn * rn != n || rd * rd != d) return false;
    out = Rational(rn, rd);
    return true;
}

Expr fold_function(Op op, const Expr& arg) {
    if (arg.is_constant()) {
        const Rational& v = arg.value();
        Rational r;
        if (op == Op::sqrt && exact_sqrt(v, r)) return Expr::constant(r);
        if (v == 0 && (op == Op::sin)) return Expr::constant(0L);
        if (v == 0 && (op == Op::cos || op == Op::exp)) return Expr::constant(1L);
        if (v == 1 && op == Op::log) return Expr::constant(0L);
    }
    return Expr::unary(op, arg);
}

class Simplifier {
public:
    Expr run(const Expr& e) {
        auto it = memo_.find(e.id());
        if (it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.id(), r);
        keep_.push_back(e);
        keep_.push_back(r);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        if (e.op() == Op::constant || e.op() == Op::variable) return e;
        std::vector<Expr> ch;
        ch.reserve(e.children().size());
        for (const Expr& c : e.children()) ch.push_back(run(c));
        Expr rebuilt = rebuild(e, ch);
        switch (rebuilt.op()) {
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::neg:
            case Op::pow:
            case Op::div:
                break;
            default:
                return rebuilt;
        }
        PolyPtr p = poly(rebuilt);
        Expr canon = from_poly(*p);
        Expr best = canon.node_count() <= rebuilt.node_count() ? canon : rebuilt;
        poly_memo_.emplace(best.id(), p);
        keep_.push_back(best);
        return best;
    }

    static Expr rebuild(const Expr& e, const std::vector<Expr>& ch) {
        switch (e.op()) {
            case Op::neg: return -ch[0];
            case Op::add: return sum(ch);
            case Op::sub: return ch[0] - ch[1];
            case Op::mul: {
                Expr acc = Expr::constant(1L);
                for (const Expr& c : ch) acc = acc * c;
                return acc;
            }
            case Op::div: return ch[0] / ch[1];
            case Op::pow: return pow(ch[0], e.exponent());
            default: return fold_function(e.op(), ch[0]);
        }
    }

    PolyPtr poly(const Expr& e) {
        auto it = poly_memo_.find(e.id());
        if (it != poly_memo_.end()) return it->second;
        auto p = std::make_shared<Poly>(compute_poly(e));
        poly_memo_.emplace(e.id(), p);
        keep_.push_back(e);
        return p;
    }

    Poly compute_poly(const Expr& e) {
        const auto& ch = e.children();
        switch (e.op()) {
            case Op::constant:
                return constant_poly(e.value());
            case Op::neg: {
                Poly r = *poly(ch[0]);
                for (auto& [m, c] : r) c = -c;
                return r;
            }
            case Op::add: {
                Poly r;
                for (const Expr& c : ch) {
                    for (const auto& [m, k] : *poly(c)) accumulate(r, m, k);
                }
                return r;
            }
            case Op::sub: {
                Poly r = *poly(ch[0]);
                for (const auto& [m, k] : *poly(ch[1])) accumulate(r, m, -k);
                return r;
            }
            case Op::mul: {
                Poly r = constant_poly(1);
                for (const Expr& c : ch) {
                    auto prod = product(r, *poly(c));
                    if (!prod) return atom_poly(e);
                    r = std::move(*prod);
                }
                return r;
            }
            case Op::pow: {
                Poly base = *poly(ch[0]);
                Poly r = constant_poly(1);
                for (std::size_t k = 0; k < e.exponent(); ++k) {
                    auto prod = product(r, base);
                    if (!prod) return atom_poly(e);
                    r = std::move(*prod);
                }
                return r;
            }
            case Op::div:
                if (ch[1].is_constant() && ch[1].value() != 0) {
                    Poly r = *poly(ch[0]);
                    for (auto& [m, c] : r) c /= ch[1].value();
                    return r;
                }
                return atom_poly(e);
            default:
                return atom_poly(e);
        }
    }

    std::optional<Poly> product(const Poly& a, const Poly& b) {
        if (a.size() * b.size() > kTermBudget) return std::nullopt;
        Poly r;
        for (const auto& [ma, ca] : a) {
            for (const auto& [mb, cb] : b) accumulate(r, multiply(ma, mb), ca * cb);
        }
        return reduce_square_roots(std::move(r));
    }

    // sqrt(u)^e with e >= 2 is rewritten as u^(e/2) * sqrt(u)^(e%2).
    std::optional<Poly> reduce_square_roots(Poly p) {
        for (;;) {
            auto target = p.end();
            std::size_t pos = 0;
            for (auto it = p.begin(); it != p.end() && target == p.end(); ++it) {
                for (std::size_t i = 0; i < it->first.factors.size(); ++i) {
                    const Factor& f = it->first.factors[i];
                    if (f.first.op() == Op::sqrt && f.second >= 2) {
                        target = it;
                        pos = i;
                        break;
                    }
                }
            }
            if (target == p.end()) return p;
            Monomial m = target->first;
            Rational c = target->second;
            p.erase(target);
            Expr root = m.factors[pos].first;
            std::size_t e = m.factors[pos].second;
            m.degree -= e - e % 2;
            if (e % 2 == 0) m.factors.erase(m.factors.begin() + static_cast<std::ptrdiff_t>(pos));
            else m.factors[pos].second = 1;
            Poly inner = *poly(root.child(0));
            Poly term;
            term.emplace(m, c);
            for (std::size_t k = 0; k < e / 2; ++k) {
                if (term.size() * inner.size() > kTermBudget) return std::nullopt;
                Poly next;
                for (const auto& [ma, ca] : term) {
                    for (const auto& [mb, cb] : inner) accumulate(next, multiply(ma, mb), ca * cb);
                }
                term = std::move(next);
            }
            for (const auto& [mt, ct] : term) accumulate(p, mt, ct);
            if (p.size() > kTermBudget) return std::nullopt;
        }
    }

    static Expr build_term(const Rational& magnitude, const Monomial& m) {
        std::vector<Expr> factors;
        for (const auto& [atom, k] : m.factors) factors.push_back(k == 1 ? atom : Expr::power(atom, k));
        if (factors.empty()) return Expr::constant(magnitude);
        if (magnitude != 1) factors.insert(factors.begin(), Expr::constant(magnitude));
        return Expr::nary(Op::mul, std::move(factors));
    }

    static Expr from_poly(const Poly& p) {
        if (p.empty()) return Expr::constant(0L);
        std::vector<Expr> pos;
        std::vector<Expr> neg;
        for (const auto& [m, c] : p) {
            if (c > 0) pos.push_back(build_term(c, m));
            else neg.push_back(build_term(-c, m));
        }
        if (neg.empty()) return Expr::nary(Op::add, std::move(pos));
        if (pos.empty()) {
            if (neg.size() == 1) {
                const auto& [m, c] = *p.begin();
                if (m.factors.empty()) return Expr::constant(c);
                if (c == -1) return Expr::unary(Op::neg, neg.front());
                Expr t = build_term(c, m);
                return t;
            }
            return Expr::unary(Op::neg, Expr::nary(Op::add, std::move(neg)));
        }
        return Expr::binary(Op::sub, Expr::nary(Op::add, std::move(pos)), Expr::nary(Op::add, std::move(neg)));
    }

    std::unordered_map<const Node*, Expr> memo_;
    std::unordered_map<const Node*, PolyPtr> poly_memo_;
    std::vector<Expr> keep_;
};

}  // namespace

Expr simplify(const Expr& e) {
    Simplifier s;
    return s.run(e);
}

}  // namespace morin::expr
