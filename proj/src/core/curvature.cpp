#include "kahler/calculus.hpp"
#include "kahler/error.hpp"
#include "kahler/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace kahler {

namespace {

constexpr std::size_t kSlabNodes = std::size_t(1) << 19;

struct Comp {
    int i, j;
};

// R(i,j,k,l) stored flat as ((i*n + j)*n + k)*n + l.
inline int flat(int n, int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; }

// Contract one index of a rank-4 tensor with P (or conj P).
void contract(const std::vector<cd>& in, std::vector<cd>& out, const SmallMatrix& P, int n, int slot, bool conj) {
    std::fill(out.begin(), out.end(), cd(0.0));
    std::array<int, 4> idx{};
    for (int t = 0; t < n * n * n * n; ++t) {
        int r = t;
        for (int s = 3; s >= 0; --s) {
            idx[s] = r % n;
            r /= n;
        }
        const int a = idx[slot];
        for (int p = 0; p < n; ++p) {
            auto src = idx;
            src[slot] = p;
            const cd w = conj ? std::conj(P(p, a)) : P(p, a);
            out[t] += w * in[flat(n, src[0], src[1], src[2], src[3])];
        }
    }
}

template <class Sink>
void curvature_kernel(const MetricField& g, Sink&& sink) {
    const GridChart& chart = g.chart();
    const Form11Field& h = g.form();
    const int n = g.n();
    const std::size_t S = chart.row_size();
    const bool polar = chart.log_polar();
    Calculus calc(chart);

    std::vector<Comp> comps;
    std::vector<std::vector<int>> comp_of(n, std::vector<int>(n, -1));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            comp_of[i][j] = static_cast<int>(comps.size());
            comps.push_back({i, j});
        }
    const int nc = static_cast<int>(comps.size());

    const int rows = std::max<int>(1, static_cast<int>(kSlabNodes / S));
    const int n4 = n * n * n * n;
    std::vector<cd> R(n4), tmp_a(n4), tmp_b(n4);
    double defect = 0.0;

    for (RowRange out : calc.slabs(rows)) {
        const RowRange in = calc.halo(out);
        const std::size_t cnt = static_cast<std::size_t>(out.size()) * S;
        std::vector<std::vector<cd>> d1(nc * n, std::vector<cd>(cnt)), d1b(nc * n, std::vector<cd>(cnt)),
            d2(nc * n * n, std::vector<cd>(cnt));
        std::vector<double> real_tmp(cnt);
        // On log-polar charts differentiate the coefficients in w = log z_1,
        // which stay smooth in t where the z_1 coefficients carry r^{-2}.
        std::vector<std::vector<double>> wdiag(polar ? n : 0);
        std::vector<std::vector<cd>> woff(polar ? n : 0);
        if (polar) {
            const std::size_t base = static_cast<std::size_t>(in.lo) * S, m = static_cast<std::size_t>(in.size()) * S;
            wdiag[0].resize(m);
            for (std::size_t q = 0; q < m; ++q) {
                const double r = chart.radius(base + q);
                wdiag[0][q] = r * r * h.diag(0)[base + q];
            }
            for (int j = 1; j < n; ++j) {
                woff[j].resize(m);
                for (std::size_t q = 0; q < m; ++q) woff[j][q] = chart.z(base + q, 0) * h.off(0, j)[base + q];
            }
        }
        for (int c = 0; c < nc; ++c) {
            const auto [i, j] = comps[c];
            const int ncomp = i == j ? 1 : 2;
            const double* src = i == j ? h.diag(i).data() + in.lo * S
                                       : reinterpret_cast<const double*>(h.off(i, j).data() + in.lo * S);
            if (polar && i == 0) src = j == 0 ? wdiag[0].data() : reinterpret_cast<const double*>(woff[j].data());
            for (int k = 0; k < n; ++k) {
                calc.dz(src, ncomp, in, d1[c * n + k].data(), out, k, false);
                calc.dz(src, ncomp, in, d1b[c * n + k].data(), out, k, true);
                for (int l = 0; l < n; ++l) {
                    auto& dst = d2[(c * n + k) * n + l];
                    if (k != l) {
                        calc.mixed(src, ncomp, in, dst.data(), out, k, l);
                    } else if (ncomp == 1) {
                        calc.laplace_pair(src, 1, in, real_tmp.data(), out, k);
                        for (std::size_t q = 0; q < cnt; ++q) dst[q] = real_tmp[q];
                    } else {
                        calc.laplace_pair(src, 2, in, reinterpret_cast<double*>(dst.data()), out, k);
                    }
                }
            }
        }
        if (polar) {
            // chain rule: d_w = z d_z, dbar_w = zbar dbar_z
            for (std::size_t q = 0; q < cnt; ++q) {
                const cd z = chart.z(static_cast<std::size_t>(out.lo) * S + q, 0), zb = std::conj(z);
                for (int c = 0; c < nc; ++c) {
                    d1[c * n][q] *= z;
                    d1b[c * n][q] *= zb;
                    for (int k = 0; k < n; ++k) {
                        d2[(c * n + k) * n][q] *= zb;
                        d2[(c * n) * n + k][q] *= z;
                    }
                }
            }
        }

        for (std::size_t q = 0; q < cnt; ++q) {
            const std::size_t node = static_cast<std::size_t>(out.lo) * S + q;
            SmallMatrix G = h.matrix(node);
            cd z1 = 1.0;
            if (polar) {
                z1 = chart.z(node, 0);
                G.row(0) *= z1;
                G.col(0) *= std::conj(z1);
            }
            auto D = [&](int i, int j, int k) {
                return i <= j ? d1[comp_of[i][j] * n + k][q] : std::conj(d1b[comp_of[j][i] * n + k][q]);
            };
            auto Db = [&](int i, int j, int l) {
                return i <= j ? d1b[comp_of[i][j] * n + l][q] : std::conj(d1[comp_of[j][i] * n + l][q]);
            };
            auto DD = [&](int i, int j, int k, int l) {
                return i <= j ? d2[(comp_of[i][j] * n + k) * n + l][q]
                              : std::conj(d2[(comp_of[j][i] * n + l) * n + k][q]);
            };
            Eigen::LLT<SmallMatrix> llt(G);
            const SmallMatrix Gi = llt.solve(SmallMatrix::Identity(n, n));
            double scale = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            cd v = -DD(i, j, k, l);
                            for (int p = 0; p < n; ++p)
                                for (int qq = 0; qq < n; ++qq) v += Gi(qq, p) * D(i, qq, k) * Db(p, j, l);
                            tmp_a[flat(n, i, j, k, l)] = v;
                            scale = std::max(scale, std::abs(v));
                        }
            // Kahler symmetrization
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            const cd s = 0.25 * (tmp_a[flat(n, i, j, k, l)] + tmp_a[flat(n, k, j, i, l)] +
                                                 tmp_a[flat(n, i, l, k, j)] + tmp_a[flat(n, k, l, i, j)]);
                            R[flat(n, i, j, k, l)] = s;
                        }
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            const cd a = R[flat(n, i, j, k, l)], b = std::conj(R[flat(n, j, i, l, k)]);
                            tmp_b[flat(n, i, j, k, l)] = 0.5 * (a + b);
                        }
            if (scale > 0.0)
                for (int t = 0; t < n4; ++t) defect = std::max(defect, std::abs(tmp_b[t] - tmp_a[t]) / scale);
            R = tmp_b;

            // unitary frame: G = C C^H, P = (C^{-1})^T
            const SmallMatrix Cinv = llt.matrixL().solve(SmallMatrix::Identity(n, n));
            const SmallMatrix P = Cinv.transpose();
            contract(R, tmp_a, P, n, 0, false);
            contract(tmp_a, tmp_b, P, n, 1, true);
            contract(tmp_b, tmp_a, P, n, 2, false);
            contract(tmp_a, tmp_b, P, n, 3, true);
            double norm2 = 0.0;
            for (int t = 0; t < n4; ++t) norm2 += std::norm(tmp_b[t]);
            if (polar) {
                // back to the z_1 frame
                const cd iz = 1.0 / z1, izb = std::conj(iz);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            for (int l = 0; l < n; ++l) {
                                cd f = 1.0;
                                if (i == 0) f *= iz;
                                if (k == 0) f *= iz;
                                if (j == 0) f *= izb;
                                if (l == 0) f *= izb;
                                R[flat(n, i, j, k, l)] *= f;
                            }
            }
            sink(node, R, std::sqrt(norm2));
        }
    }
    sink.finish(defect);
}

struct FullSink {
    CurvatureField& field;
    int n;
    void operator()(std::size_t node, const std::vector<cd>& R, double norm) {
        const int m = field.pairs();
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < n; ++i)
            for (int k = i; k < n; ++k) pairs.emplace_back(i, k);
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b)
                field.set_packed(node, a, b,
                                 R[flat(n, pairs[a].first, pairs[b].first, pairs[a].second, pairs[b].second)]);
        field.mutable_norm()[node] = norm;
    }
    void finish(double defect) { field.symmetry_defect = defect; }
};

struct NormSink {
    std::vector<double>& norm;
    void operator()(std::size_t node, const std::vector<cd>&, double v) { norm[node] = v; }
    void finish(double) {}
};

}  // namespace

CurvatureField curvature_tensor(const MetricField& g) {
    CurvatureField field(g.chart_ptr(), g.n());
    curvature_kernel(g, FullSink{field, g.n()});
    return field;
}

ScalarField curvature_norm(const MetricField& g) {
    std::vector<double> norm(g.chart().node_count());
    curvature_kernel(g, NormSink{norm});
    return ScalarField::real(g.chart_ptr(), std::move(norm));
}

}  // namespace kahler
