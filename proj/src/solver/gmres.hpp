#pragma once

#include <functional>
#include <vector>

namespace kahler::detail {

using LinearMap = std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct GmresResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Restarted GMRES with right preconditioning: solves A x = b starting from
/// the x passed in. Stops when |b - A x| <= tol * |b|.
GmresResult gmres(const LinearMap& A, const LinearMap& Minv, const std::vector<double>& b, std::vector<double>& x,
                  double tol, int max_iter, int restart);

}  // namespace kahler::detail
