#include "morin/expr.hpp"

#include <unordered_map>

namespace morin::expr {

namespace {

class Differentiator {
public:
    explicit Differentiator(std::size_t var) : var_(var) {}

    Expr d(const Expr& e) {
        auto it = memo_.find(e.id());
        if (it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.id(), r);
        keep_.push_back(e);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        const auto& ch = e.children();
        switch (e.op()) {
            case Op::constant:
                return Expr::constant(0L);
            case Op::variable:
                return Expr::constant(e.var_index() == var_ ? 1L : 0L);
            case Op::neg:
                return -d(ch[0]);
            case Op::add: {
                std::vector<Expr> terms;
                for (const Expr& c : ch) terms.push_back(d(c));
                return sum(terms);
            }
            case Op::sub:
                return d(ch[0]) - d(ch[1]);
            case Op::mul: {
                std::vector<Expr> terms;
                for (std::size_t i = 0; i < ch.size(); ++i) {
                    Expr di = d(ch[i]);
                    if (di.is_zero()) continue;
                    Expr t = di;
                    for (std::size_t j = 0; j < ch.size(); ++j) {
                        if (j != i) t = t * ch[j];
                    }
                    terms.push_back(t);
                }
                return sum(terms);
            }
            case Op::div: {
                Expr da = d(ch[0]);
                Expr db = d(ch[1]);
                if (db.is_zero()) return da / ch[1];
                return (da * ch[1] - ch[0] * db) / pow(ch[1], 2);
            }
            case Op::pow: {
                Expr db = d(ch[0]);
                std::size_t k = e.exponent();
                if (db.is_zero() || k == 0) return Expr::constant(0L);
                return Expr::constant(static_cast<long>(k)) * pow(ch[0], k - 1) * db;
            }
            case Op::sqrt: {
                Expr du = d(ch[0]);
                if (du.is_zero()) return du;
                return du / (Expr::constant(2L) * e);
            }
            case Op::sin:
                return Expr::unary(Op::cos, ch[0]) * d(ch[0]);
            case Op::cos:
                return -(Expr::unary(Op::sin, ch[0]) * d(ch[0]));
            case Op::exp:
                return e * d(ch[0]);
            case Op::log:
                return d(ch[0]) / ch[0];
        }
        return Expr::constant(0L);
    }

    std::size_t var_;
    std::unordered_map<const Node*, Expr> memo_;
    std::vector<Expr> keep_;
};

}  // namespace

Expr differentiate(const Expr& e, std::size_t var_index) {
    Differentiator diff(var_index);
    return simplify(diff.d(e));
}

std::vector<Expr> gradient(const Expr& e, std::size_t dim) {
    std::vector<Expr> g;
    g.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) g.push_back(differentiate(e, j));
    return g;
}

}  // namespace morin::expr
