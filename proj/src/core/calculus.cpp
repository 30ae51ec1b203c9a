#include "kahler/calculus.hpp"

#include "kahler/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace kahler {

namespace {

// FFTW plans for batched in-place line transforms, cached for the life of
// the process. Planning is serialized; execution uses the new-array API on
// fftw_malloc'd buffers, which is thread safe.
struct PlanKey {
    int n;
    std::size_t inner, outer;
    int sign;
    bool operator<(const PlanKey& o) const {
        return std::tie(n, inner, outer, sign) < std::tie(o.n, o.inner, o.outer, o.sign);
    }
};

std::mutex plan_mutex;
std::map<PlanKey, fftw_plan>& plan_cache() {
    static std::map<PlanKey, fftw_plan> cache;
    return cache;
}

fftw_plan line_plan(int n, std::size_t inner, std::size_t outer, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    PlanKey key{n, inner, outer, sign};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    fftw_iodim dim{n, static_cast<int>(inner), static_cast<int>(inner)};
    fftw_iodim many[2] = {{static_cast<int>(outer), static_cast<int>(n * inner), static_cast<int>(n * inner)},
                          {static_cast<int>(inner), 1, 1}};
    fftw_plan p = fftw_plan_guru_dft(1, &dim, 2, many, buf, buf, sign, FFTW_ESTIMATE);
    if (!p) throw KahlerError("fftw planning failed");
    cache.emplace(key, p);
    return p;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
};

constexpr std::size_t kChunkNodes = std::size_t(1) << 21;

}  // namespace

Calculus::Calculus(const GridChart& chart) : chart_(chart) {
    tables_.resize(chart.axis_count());
    for (int a = 0; a < chart.axis_count(); ++a) {
        const Axis& ax = chart.axis(a);
        if (ax.periodic) continue;
        tables_[a].push_back(make_fd_table(ax.count, ax.spacing(), 1, chart.fd_order()));
        tables_[a].push_back(make_fd_table(ax.count, ax.spacing(), 2, chart.fd_order()));
    }
    if (chart.log_polar()) {
        for (int k = 0; k < chart.radial_count(); ++k) row_radius_.push_back(chart.radius_at(k));
        for (int k = 0; k < chart.count(1); ++k) phase_.push_back(std::polar(1.0, chart.axis(1).coordinate(k)));
    }
}

RowRange Calculus::halo(RowRange out) const { return halo_once(halo_once(out)); }

RowRange Calculus::halo_once(RowRange out) const {
    if (chart_.periodic(0)) return all_rows();
    int lo = out.hi, hi = out.lo;
    for (const auto& t : tables_[0]) {
        for (int r = out.lo; r < out.hi; ++r) {
            lo = std::min(lo, t.start[r]);
            hi = std::max(hi, t.start[r] + t.width);
        }
    }
    return {std::max(lo, 0), std::min(hi, chart_.radial_count())};
}

std::vector<RowRange> Calculus::slabs(int rows) const {
    if (chart_.periodic(0)) return {all_rows()};
    std::vector<RowRange> s;
    const int total = chart_.radial_count();
    for (int lo = 0; lo < total; lo += rows) s.push_back({lo, std::min(total, lo + rows)});
    return s;
}

void Calculus::fd_axis0(const double* in, RowRange in_rows, double* out, RowRange out_rows, const FdTable& t,
                        int ncomp) const {
    const std::size_t S = chart_.row_size() * ncomp;
    for (int r = out_rows.lo; r < out_rows.hi; ++r) {
        double* o = out + static_cast<std::size_t>(r - out_rows.lo) * S;
        std::fill(o, o + S, 0.0);
        const double* w = t.weights.data() + static_cast<std::size_t>(r) * t.width;
        for (int k = 0; k < t.width; ++k) {
            const double wk = w[k];
            if (wk == 0.0) continue;
            const int src = t.start[r] + k;
            if (src < in_rows.lo || src >= in_rows.hi) throw KahlerError("fd: input rows do not cover the stencil");
            const double* s = in + static_cast<std::size_t>(src - in_rows.lo) * S;
            for (std::size_t q = 0; q < S; ++q) o[q] += wk * s[q];
        }
    }
}

void Calculus::fd_inner(const double* in, double* out, std::size_t values, int axis, const FdTable& t,
                        int ncomp) const {
    const std::size_t inner = chart_.stride(axis) * ncomp;
    const std::size_t N = static_cast<std::size_t>(chart_.count(axis));
    const std::size_t outer = values * ncomp / (N * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in + o * N * inner;
        double* dst = out + o * N * inner;
        for (std::size_t i = 0; i < N; ++i) {
            double* d = dst + i * inner;
            std::fill(d, d + inner, 0.0);
            const double* w = t.weights.data() + i * t.width;
            for (int k = 0; k < t.width; ++k) {
                const double wk = w[k];
                if (wk == 0.0) continue;
                const double* s = src + static_cast<std::size_t>(t.start[i] + k) * inner;
                for (std::size_t q = 0; q < inner; ++q) d[q] += wk * s[q];
            }
        }
    }
}

void Calculus::spectral(const double* in, RowRange in_rows, double* out, RowRange out_rows, int axis, int order,
                        int ncomp) const {
    const Axis& ax = chart_.axis(axis);
    const int N = ax.count;
    const std::size_t S = chart_.row_size();
    const std::size_t inner = chart_.stride(axis);
    std::vector<cd> symbol(N);
    for (int m = 0; m < N; ++m) {
        int mm = m <= N / 2 ? m : m - N;
        const double k = 2.0 * std::numbers::pi * mm / (ax.hi - ax.lo);
        // Nyquist is dropped for both orders so d2 = d1 o d1 exactly.
        const cd s1 = (2 * m == N) ? cd(0.0) : cd(0.0, k);
        symbol[m] = order == 1 ? s1 : s1 * s1;
        symbol[m] /= static_cast<double>(N);
    }

    // chunks of whole rows (axis 0 itself: all rows at once)
    int chunk = axis == 0 ? chart_.radial_count() : std::max<int>(1, static_cast<int>(kChunkNodes / S));
    for (int lo = out_rows.lo; lo < out_rows.hi; lo += chunk) {
        const int hi = std::min(out_rows.hi, lo + chunk);
        if (axis == 0 && (lo != 0 || hi != chart_.radial_count() || in_rows.lo != 0))
            throw KahlerError("spectral derivative along axis 0 needs the full grid");
        const std::size_t count = static_cast<std::size_t>(hi - lo) * S;
        FftwBuffer buf(count);
        const double* src = in + static_cast<std::size_t>(lo - in_rows.lo) * S * ncomp;
        if (ncomp == 2) {
            std::memcpy(buf.data, src, count * sizeof(fftw_complex));
        } else {
            for (std::size_t q = 0; q < count; ++q) {
                buf.data[q][0] = src[q];
                buf.data[q][1] = 0.0;
            }
        }
        const std::size_t outer = count / (static_cast<std::size_t>(N) * inner);
        fftw_execute_dft(line_plan(N, inner, outer, FFTW_FORWARD, buf.data), buf.data, buf.data);
        auto* z = reinterpret_cast<cd*>(buf.data);
        for (std::size_t o = 0; o < outer; ++o)
            for (int m = 0; m < N; ++m) {
                cd* line = z + (o * N + m) * inner;
                const cd s = symbol[m];
                for (std::size_t q = 0; q < inner; ++q) line[q] *= s;
            }
        fftw_execute_dft(line_plan(N, inner, outer, FFTW_BACKWARD, buf.data), buf.data, buf.data);
        double* dst = out + static_cast<std::size_t>(lo - out_rows.lo) * S * ncomp;
        if (ncomp == 2) {
            std::memcpy(dst, buf.data, count * sizeof(fftw_complex));
        } else {
            for (std::size_t q = 0; q < count; ++q) dst[q] = buf.data[q][0];
        }
    }
}

void Calculus::partial(const double* in, RowRange in_rows, double* out, RowRange out_rows, int axis, int order,
                       int ncomp) const {
    if (order < 1 || order > 2) throw KahlerError("partial: order must be 1 or 2");
    if (chart_.periodic(axis)) {
        spectral(in, in_rows, out, out_rows, axis, order, ncomp);
    } else if (axis == 0) {
        fd_axis0(in, in_rows, out, out_rows, table(0, order), ncomp);
    } else {
        if (!in_rows.contains(out_rows)) throw KahlerError("partial: output rows outside input rows");
        const std::size_t S = chart_.row_size();
        fd_inner(in + static_cast<std::size_t>(out_rows.lo - in_rows.lo) * S * ncomp, out,
                 static_cast<std::size_t>(out_rows.size()) * S, axis, table(axis, order), ncomp);
    }
}

void Calculus::dz(const double* in, int ncomp, RowRange in_rows, cd* out, RowRange out_rows, int c, bool bar) const {
    const std::size_t S = chart_.row_size();
    const std::size_t count = static_cast<std::size_t>(out_rows.size()) * S;
    std::vector<double> fa(count * ncomp), fb(count * ncomp);
    partial(in, in_rows, fa.data(), out_rows, 2 * c, 1, ncomp);
    partial(in, in_rows, fb.data(), out_rows, 2 * c + 1, 1, ncomp);
    const cd j(0.0, bar ? 0.5 : -0.5);
    const bool polar = c == 0 && chart_.log_polar();
    const std::size_t theta_stride = polar ? chart_.stride(1) : 1;
    const int theta_count = polar ? chart_.count(1) : 1;
    for (std::size_t q = 0; q < count; ++q) {
        const cd a = ncomp == 2 ? cd(fa[2 * q], fa[2 * q + 1]) : cd(fa[q], 0.0);
        const cd b = ncomp == 2 ? cd(fb[2 * q], fb[2 * q + 1]) : cd(fb[q], 0.0);
        cd v = 0.5 * a + j * b;
        if (polar) {
            const int row = out_rows.lo + static_cast<int>(q / S);
            const cd ph = phase_[(q / theta_stride) % theta_count];
            v *= (bar ? ph : std::conj(ph)) / row_radius_[row];
        }
        out[q] = v;
    }
}

void Calculus::laplace_pair(const double* in, int ncomp, RowRange in_rows, double* out, RowRange out_rows,
                            int c) const {
    const std::size_t S = chart_.row_size();
    const std::size_t count = static_cast<std::size_t>(out_rows.size()) * S * ncomp;
    std::vector<double> fb(count);
    // finite-difference axes use d1 o d1, so discrete ddbar commutes with d
    auto second = [&](int axis, double* dst) {
        if (chart_.periodic(axis)) {
            partial(in, in_rows, dst, out_rows, axis, 2, ncomp);
            return;
        }
        const RowRange mid = axis == 0 ? halo_once(out_rows) : out_rows;
        if (!in_rows.contains(mid)) throw KahlerError("laplace_pair: input rows too narrow");
        std::vector<double> tmp(static_cast<std::size_t>(mid.size()) * S * ncomp);
        partial(in, in_rows, tmp.data(), mid, axis, 1, ncomp);
        partial(tmp.data(), mid, dst, out_rows, axis, 1, ncomp);
    };
    second(2 * c, out);
    second(2 * c + 1, fb.data());
    const bool polar = c == 0 && chart_.log_polar();
    for (std::size_t q = 0; q < count; ++q) {
        double v = 0.25 * (out[q] + fb[q]);
        if (polar) {
            const double r = row_radius_[out_rows.lo + q / (S * ncomp)];
            v /= r * r;
        }
        out[q] = v;
    }
}

void Calculus::mixed(const double* in, int ncomp, RowRange in_rows, cd* out, RowRange out_rows, int c, int d) const {
    if (c == d) throw KahlerError("mixed: use laplace_pair for c == d");
    const RowRange mid = c == 0 ? halo(out_rows) : out_rows;
    if (!in_rows.contains(mid)) throw KahlerError("mixed: input rows too narrow");
    std::vector<cd> tmp(static_cast<std::size_t>(mid.size()) * chart_.row_size());
    dz(in, ncomp, in_rows, tmp.data(), mid, d, true);
    dz(reinterpret_cast<const double*>(tmp.data()), 2, mid, out, out_rows, c, false);
}

double Calculus::tail_ratio(const double* in, int ncomp, int axis) const {
    const int N = chart_.count(axis);
    const std::size_t S = chart_.row_size();
    const std::size_t inner = chart_.stride(axis);
    const int rows = chart_.radial_count();
    const int chunk = axis == 0 ? rows : std::max<int>(1, static_cast<int>(kChunkNodes / S));
    double top = 0.0, tail = 0.0;
    for (int lo = 0; lo < rows; lo += chunk) {
        const int hi = std::min(rows, lo + chunk);
        const std::size_t count = static_cast<std::size_t>(hi - lo) * S;
        FftwBuffer buf(count);
        const double* src = in + static_cast<std::size_t>(lo) * S * ncomp;
        for (std::size_t q = 0; q < count; ++q) {
            buf.data[q][0] = src[q * ncomp];
            buf.data[q][1] = ncomp == 2 ? src[q * 2 + 1] : 0.0;
        }
        const std::size_t outer = count / (static_cast<std::size_t>(N) * inner);
        fftw_execute_dft(line_plan(N, inner, outer, FFTW_FORWARD, buf.data), buf.data, buf.data);
        const auto* z = reinterpret_cast<const cd*>(buf.data);
        for (std::size_t o = 0; o < outer; ++o)
            for (int m = 0; m < N; ++m) {
                const int mm = std::abs(m <= N / 2 ? m : m - N);
                const cd* line = z + (o * N + m) * inner;
                for (std::size_t q = 0; q < inner; ++q) {
                    const double a = std::abs(line[q]);
                    top = std::max(top, a);
                    if (4 * mm > N) tail = std::max(tail, a);
                }
            }
    }
    return top > 0.0 ? tail / top : 0.0;
}

std::vector<double> Calculus::partial(const std::vector<double>& in, int axis, int order) const {
    std::vector<double> out(in.size());
    partial(in.data(), all_rows(), out.data(), all_rows(), axis, order, 1);
    return out;
}

std::vector<cd> Calculus::dz(const std::vector<double>& in, int c, bool bar) const {
    std::vector<cd> out(in.size());
    dz(in.data(), 1, all_rows(), out.data(), all_rows(), c, bar);
    return out;
}

std::vector<cd> Calculus::dz(const std::vector<cd>& in, int c, bool bar) const {
    std::vector<cd> out(in.size());
    dz(reinterpret_cast<const double*>(in.data()), 2, all_rows(), out.data(), all_rows(), c, bar);
    return out;
}

}  // namespace kahler
