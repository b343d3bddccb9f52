#pragma once

#include "morin/expr.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace morin::expr {

// Flat instruction list for repeated evaluation of a fixed set of expressions.
// Structurally equal subtrees share one slot.
class Tape {
public:
    Tape() = default;
    explicit Tape(std::span<const Expr> outputs);

    std::size_t output_count() const { return outputs_.size(); }
    std::size_t instruction_count() const { return code_.size(); }

    // Returns false on a domain error or a non-finite output.
    bool evaluate(std::span<const double> point, std::span<double> out, std::vector<double>& work) const;

private:
    struct Instr {
        Op op;
        std::uint32_t first = 0;
        std::uint32_t count = 0;
        std::size_t index = 0;
        double value = 0.0;
    };

    std::vector<Instr> code_;
    std::vector<std::uint32_t> args_;
    std::vector<std::uint32_t> outputs_;
};

}  // namespace morin::expr
