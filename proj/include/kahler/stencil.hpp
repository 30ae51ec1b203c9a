#pragma once

#include <vector>

namespace kahler {

/// Fornberg's recursion: weights for derivatives 0..max_order at x0 from the
/// nodes x. Result[m][k] is the weight of x[k] for the m-th derivative.
std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& x,
                                                  int max_order);

/// Finite-difference table for one derivative order on a uniform,
/// non-periodic line of `count` points with spacing h.
struct FdTable {
    int count = 0;
    int width = 0;
    std::vector<int> start;         // first stencil node per output point
    std::vector<double> weights;    // count * width, row-major
};

/// Central stencils of `accuracy`+1 points in the interior; one-sided
/// stencils near the ends keep the same formal order.
FdTable make_fd_table(int count, double h, int derivative, int accuracy);

/// Trapezoid weights with Gregory end corrections exact for polynomials of
/// degree <= 7 (falls back to fewer corrections on short lines).
std::vector<double> gregory_weights(int count, double h);

}  // namespace kahler
