#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kahler {

struct KahlerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid chart parameters or fields living on different charts.
struct ChartError : KahlerError {
    using KahlerError::KahlerError;
};

/// Wrong parity, wrong size, or other malformed field input.
struct FieldError : KahlerError {
    using KahlerError::KahlerError;
};

/// The spectral tail of an input is too heavy for the grid.
struct ResolutionError : KahlerError {
    ResolutionError(const std::string& what, int axis, double tail_ratio)
        : KahlerError(what), axis(axis), tail_ratio(tail_ratio) {}
    int axis;
    double tail_ratio;
};

/// A (1,1)-form that had to be positive is not. Carries the per-node
/// minimum eigenvalue so callers can see where it went wrong.
struct PositivityError : KahlerError {
    PositivityError(const std::string& what, std::size_t worst_node, double margin,
                    std::vector<double> min_eigenvalues, double largest_positive_radius = 0.0)
        : KahlerError(what), worst_node(worst_node), margin(margin),
          min_eigenvalues(std::move(min_eigenvalues)),
          largest_positive_radius(largest_positive_radius) {}
    std::size_t worst_node;
    double margin;
    std::vector<double> min_eigenvalues;
    // Only meaningful on log-polar charts: the largest radius r such that the
    // form is positive on every node with |z1| <= r (0 if none).
    double largest_positive_radius;
};

/// log det of a metric is not finite at some node.
struct DegeneracyError : KahlerError {
    DegeneracyError(const std::string& what, std::size_t worst_node)
        : KahlerError(what), worst_node(worst_node) {}
    std::size_t worst_node;
};

struct ConfigError : KahlerError {
    using KahlerError::KahlerError;
};

}  // namespace kahler
