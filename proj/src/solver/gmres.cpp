#include "gmres.hpp"

#include <cmath>
#include <limits>

namespace kahler::detail {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

GmresResult gmres(const LinearMap& A, const LinearMap& Minv, const std::vector<double>& b, std::vector<double>& x,
                  double tol, int max_iter, int restart) {
    const std::size_t N = b.size();
    GmresResult res;
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        x.assign(N, 0.0);
        res.converged = true;
        return res;
    }
    std::vector<double> r(N), w(N), z(N);
    std::vector<std::vector<double>> V;
    std::vector<std::vector<double>> H;
    std::vector<double> cs(restart), sn(restart), g(restart + 1);

    double previous = std::numeric_limits<double>::infinity();
    while (res.iterations < max_iter) {
        A(x, w);
        for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - w[i];
        double beta = std::sqrt(dot(r, r));
        res.relative_residual = beta / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        // a restart cycle that gained less than half a digit: b has a
        // component outside the range, stop with the least-squares iterate
        if (res.relative_residual > 0.3 * previous) return res;
        previous = res.relative_residual;
        V.assign(1, r);
        for (double& v : V[0]) v /= beta;
        H.assign(restart, std::vector<double>(restart + 1, 0.0));
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        int k = 0;
        for (; k < restart && res.iterations < max_iter; ++k, ++res.iterations) {
            Minv(V[k], z);
            A(z, w);
            for (int j = 0; j <= k; ++j) {  // modified Gram-Schmidt
                H[k][j] = dot(w, V[j]);
                for (std::size_t i = 0; i < N; ++i) w[i] -= H[k][j] * V[j][i];
            }
            H[k][k + 1] = std::sqrt(dot(w, w));
            for (int j = 0; j < k; ++j) {
                const double t = cs[j] * H[k][j] + sn[j] * H[k][j + 1];
                H[k][j + 1] = -sn[j] * H[k][j] + cs[j] * H[k][j + 1];
                H[k][j] = t;
            }
            const double d = std::hypot(H[k][k], H[k][k + 1]);
            cs[k] = d == 0.0 ? 1.0 : H[k][k] / d;
            sn[k] = d == 0.0 ? 0.0 : H[k][k + 1] / d;
            const double hk1 = H[k][k + 1];
            H[k][k] = d;
            H[k][k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            res.relative_residual = std::abs(g[k + 1]) / bnorm;
            if (hk1 > 0.0 && res.relative_residual > tol) {
                V.push_back(w);
                for (double& v : V.back()) v /= hk1;
            } else {
                ++k;
                ++res.iterations;
                break;
            }
        }
        // back substitution for y, then x += M^{-1} V y
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H[j][i] * y[j];
            y[i] = s / H[i][i];
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < k; ++j)
            for (std::size_t i = 0; i < N; ++i) w[i] += y[j] * V[j][i];
        Minv(w, z);
        for (std::size_t i = 0; i < N; ++i) x[i] += z[i];
    }
    A(x, w);
    for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - w[i];
    res.relative_residual = std::sqrt(dot(r, r)) / bnorm;
    res.converged = res.relative_residual <= tol;
    return res;
}

}  // namespace kahler::detail
