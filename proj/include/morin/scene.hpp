#pragma once

#include "morin/expr.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace morin::model {

using expr::Expr;

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FrameMode { coframe, frame };

struct Box {
    std::vector<std::pair<double, double>> bounds;

    std::size_t dim() const { return bounds.size(); }
    double diameter() const;
    bool contains(std::span<const double> x, double slack = 0.0) const;
    // Distance from x to the nearest face, negative outside.
    double inset(std::span<const double> x) const;
};

struct Tolerances {
    double residual = 1e-10;
    double rank = 1e-8;
};

struct Scene {
    std::string name;
    std::size_t ambient_dim = 0;
    std::vector<std::string> vars;
    std::vector<Expr> constraints;
    std::vector<std::vector<Expr>> coframe;  // n rows, N components each
    FrameMode mode = FrameMode::coframe;
    Box box;
    Tolerances tol;
    std::size_t grid = 64;
    std::size_t max_depth = 0;  // 0 means n
    std::optional<std::vector<double>> covector;
    std::uint64_t rng_seed = 42;
    std::map<std::size_t, Expr> hints;  // depth -> replacement for delta_depth
    std::string source;

    std::size_t n() const { return coframe.size(); }
    std::size_t codim() const { return constraints.size(); }
    std::size_t manifold_dim() const { return ambient_dim - codim(); }
    std::size_t depth_limit() const { return max_depth == 0 ? n() : max_depth; }
};

// Sectioned "key = <JSON value>" format; see README for the grammar.
Scene parse_scene(std::string_view text, const std::string& origin = "<scene>");
Scene load_scene(const std::string& path);

}  // namespace morin::model
