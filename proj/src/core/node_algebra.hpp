#pragma once

// Per-node Hermitian algebra with closed forms for n <= 2.

#include "kahler/field.hpp"

#include <cmath>

namespace kahler::detail {

inline double det_at(const Form11Field& h, std::size_t i) {
    switch (h.n()) {
        case 1: return h.diag(0)[i];
        case 2: return h.diag(0)[i] * h.diag(1)[i] - std::norm(h.off(0, 1)[i]);
        default: return h.matrix(i).determinant().real();
    }
}

/// tr(G^{-1} A) at node i.
inline double trace_at(const Form11Field& g, const Form11Field& a, std::size_t i) {
    switch (g.n()) {
        case 1: return a.diag(0)[i] / g.diag(0)[i];
        case 2: {
            const double p = g.diag(0)[i], q = g.diag(1)[i];
            const cd b = g.off(0, 1)[i];
            const double D = p * q - std::norm(b);
            return (q * a.diag(0)[i] + p * a.diag(1)[i] - 2.0 * (b * std::conj(a.off(0, 1)[i])).real()) / D;
        }
        default: {
            SmallMatrix G = g.matrix(i);
            SmallMatrix A = a.matrix(i);
            return G.llt().solve(A).trace().real();
        }
    }
}

/// det(G + A) / det(G) and the minimum eigenvalue of G + A.
inline void perturbed_at(const Form11Field& g, const Form11Field& a, std::size_t i, double& ratio, double& margin) {
    switch (g.n()) {
        case 1: {
            const double h = g.diag(0)[i] + a.diag(0)[i];
            ratio = h / g.diag(0)[i];
            margin = h;
            return;
        }
        case 2: {
            const double p = g.diag(0)[i] + a.diag(0)[i], q = g.diag(1)[i] + a.diag(1)[i];
            const cd b = g.off(0, 1)[i] + a.off(0, 1)[i];
            const double bb = std::norm(b);
            ratio = (p * q - bb) / (g.diag(0)[i] * g.diag(1)[i] - std::norm(g.off(0, 1)[i]));
            const double hh = 0.5 * (p - q);
            const double big = 0.5 * (p + q) + std::sqrt(hh * hh + bb);
            margin = big > 0.0 ? (p * q - bb) / big : p + q - big;
            return;
        }
        default: {
            SmallMatrix G = g.matrix(i);
            SmallMatrix H = G + a.matrix(i);
            ratio = H.determinant().real() / G.determinant().real();
            margin = min_eigenvalue(H);
        }
    }
}

}  // namespace kahler::detail
