#include "morin/tape.hpp"

#include <cmath>
#include <unordered_map>

namespace morin::expr {

namespace {

class Compiler {
public:
    Compiler(std::vector<std::uint32_t>& args) : args_(args) {}

    template <class Emit>
    std::uint32_t slot(const Expr& e, Emit&& emit) {
        if (auto it = by_ptr_.find(e.id()); it != by_ptr_.end()) return it->second;
        auto range = by_hash_.equal_range(e.hash());
        for (auto it = range.first; it != range.second; ++it) {
            if (structurally_equal(it->second.first, e)) {
                by_ptr_.emplace(e.id(), it->second.second);
                return it->second.second;
            }
        }
        std::vector<std::uint32_t> operands;
        for (const Expr& c : e.children()) operands.push_back(slot(c, emit));
        std::uint32_t s = emit(e, operands);
        by_ptr_.emplace(e.id(), s);
        by_hash_.emplace(e.hash(), std::make_pair(e, s));
        return s;
    }

private:
    std::vector<std::uint32_t>& args_;
    std::unordered_map<const Node*, std::uint32_t> by_ptr_;
    std::unordered_multimap<std::size_t, std::pair<Expr, std::uint32_t>> by_hash_;
};

}  // namespace

Tape::Tape(std::span<const Expr> outputs) {
    Compiler c(args_);
    auto emit = [this](const Expr& e, const std::vector<std::uint32_t>& operands) {
        Instr in;
        in.op = e.op();
        in.first = static_cast<std::uint32_t>(args_.size());
        in.count = static_cast<std::uint32_t>(operands.size());
        args_.insert(args_.end(), operands.begin(), operands.end());
        if (e.op() == Op::constant) in.value = e.numeric();
        if (e.op() == Op::variable || e.op() == Op::pow) in.index = e.op() == Op::variable ? e.var_index() : e.exponent();
        code_.push_back(in);
        return static_cast<std::uint32_t>(code_.size() - 1);
    };
    for (const Expr& e : outputs) outputs_.push_back(c.slot(e, emit));
}

bool Tape::evaluate(std::span<const double> point, std::span<double> out, std::vector<double>& work) const {
    work.resize(code_.size());
    double* w = work.data();
    const std::uint32_t* a = args_.data();
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        const std::uint32_t* op = a + in.first;
        double v = 0.0;
        switch (in.op) {
            case Op::constant: v = in.value; break;
            case Op::variable:
                if (in.index >= point.size()) return false;
                v = point[in.index];
                break;
            case Op::neg: v = -w[op[0]]; break;
            case Op::add:
                v = w[op[0]];
                for (std::uint32_t k = 1; k < in.count; ++k) v += w[op[k]];
                break;
            case Op::sub: v = w[op[0]] - w[op[1]]; break;
            case Op::mul:
                v = w[op[0]];
                for (std::uint32_t k = 1; k < in.count; ++k) v *= w[op[k]];
                break;
            case Op::div:
                if (w[op[1]] == 0.0) return false;
                v = w[op[0]] / w[op[1]];
                break;
            case Op::pow: {
                double b = w[op[0]];
                v = 1.0;
                for (std::size_t k = in.index; k; k >>= 1U) {
                    if (k & 1U) v *= b;
                    b *= b;
                }
                break;
            }
            case Op::sqrt:
                if (w[op[0]] < 0.0) return false;
                v = std::sqrt(w[op[0]]);
                break;
            case Op::sin: v = std::sin(w[op[0]]); break;
            case Op::cos: v = std::cos(w[op[0]]); break;
            case Op::exp: v = std::exp(w[op[0]]); break;
            case Op::log:
                if (w[op[0]] <= 0.0) return false;
                v = std::log(w[op[0]]);
                break;
        }
        w[i] = v;
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) {
        double v = w[outputs_[k]];
        if (!std::isfinite(v)) return false;
        out[k] = v;
    }
    return true;
}

}  // namespace morin::expr
