#include "kahler/stencil.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kahler {

std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& x,
                                                  int max_order) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

FdTable make_fd_table(int count, double h, int derivative, int accuracy) {
    if (accuracy < 2 || accuracy % 2) throw std::invalid_argument("fd accuracy must be even and >= 2");
    const int central = accuracy + 1;
    const int sided = accuracy + derivative;
    FdTable t;
    t.count = count;
    t.width = std::min(std::max(central, sided), count);
    t.start.resize(count);
    t.weights.assign(static_cast<std::size_t>(count) * t.width, 0.0);
    const int half = accuracy / 2;
    const double scale = std::pow(h, -derivative);
    for (int i = 0; i < count; ++i) {
        int s, w;
        if (i - half >= 0 && i + half <= count - 1 && central <= count) {
            s = i - half;
            w = central;
        } else {
            w = std::min(sided, count);
            s = (i - half < 0) ? 0 : count - w;
        }
        std::vector<double> xs(w);
        for (int k = 0; k < w; ++k) xs[k] = s + k;
        auto c = fornberg_weights(static_cast<double>(i), xs, derivative);
        // make the weights annihilate constants exactly
        double sum = 0.0;
        for (int k = 0; k < w; ++k)
            if (s + k != i) sum += c[derivative][k];
        c[derivative][i - s] = -sum;
        t.start[i] = s;
        for (int k = 0; k < w; ++k) t.weights[static_cast<std::size_t>(i) * t.width + k] = c[derivative][k] * scale;
    }
    return t;
}

std::vector<double> gregory_weights(int count, double h) {
    // Integrate, interval by interval, the degree-7 interpolant through the
    // eight nearest nodes. Interior weights come out exactly 1.
    std::vector<double> w(count, 0.0);
    if (count < 2) return w;
    const int p = std::min(8, count);
    Eigen::MatrixXd V(p, p);
    Eigen::VectorXd rhs(p);
    for (int k = 0; k + 1 < count; ++k) {
        const int s = std::clamp(k - (p / 2 - 1), 0, count - p);
        for (int row = 0; row < p; ++row) {
            for (int m = 0; m < p; ++m) V(row, m) = std::pow(static_cast<double>(s + m - k), row);
            rhs(row) = 1.0 / (row + 1);
        }
        Eigen::VectorXd c = V.fullPivLu().solve(rhs);
        for (int m = 0; m < p; ++m) w[s + m] += c(m) * h;
    }
    return w;
}

}  // namespace kahler
