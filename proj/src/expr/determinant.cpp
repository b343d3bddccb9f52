#include "morin/expr.hpp"

#include <bit>
#include <unordered_map>

namespace morin::expr {

namespace {

class Laplace {
public:
    explicit Laplace(const std::vector<std::vector<Expr>>& m) : m_(m), n_(m.size()) {}

    // Determinant of rows [n - popcount(cols), n) restricted to the column set.
    Expr minor(std::uint64_t cols) {
        if (cols == 0) return Expr::constant(1L);
        auto it = memo_.find(cols);
        if (it != memo_.end()) return it->second;
        std::size_t row = n_ - static_cast<std::size_t>(std::popcount(cols));
        std::vector<Expr> terms;
        int position = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (!(cols & (std::uint64_t{1} << j))) continue;
            const Expr& entry = m_[row][j];
            if (!entry.is_zero()) {
                Expr t = entry * minor(cols & ~(std::uint64_t{1} << j));
                terms.push_back(position % 2 == 0 ? t : -t);
            }
            ++position;
        }
        Expr r = simplify(sum(terms));
        memo_.emplace(cols, r);
        return r;
    }

private:
    const std::vector<std::vector<Expr>>& m_;
    std::size_t n_;
    std::unordered_map<std::uint64_t, Expr> memo_;
};

}  // namespace

Expr symbolic_determinant(const std::vector<std::vector<Expr>>& m) {
    std::size_t n = m.size();
    for (const auto& row : m) {
        if (row.size() != n) throw std::invalid_argument("symbolic_determinant: matrix is not square");
    }
    if (n == 0) return Expr::constant(1L);
    if (n > 24) throw std::invalid_argument("symbolic_determinant: matrix too large");
    Laplace l(m);
    return l.minor((std::uint64_t{1} << n) - 1);
}

}  // namespace morin::expr
