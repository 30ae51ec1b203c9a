#include "kahler/spectral.hpp"

#include "kahler/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace kahler {

namespace {

struct Plans {
    fftw_plan fwd;
    fftw_plan bwd;
};

std::mutex nd_mutex;

Plans nd_plans(const std::vector<int>& dims, fftw_complex* buf) {
    static std::map<std::vector<int>, Plans> cache;
    std::lock_guard<std::mutex> lock(nd_mutex);
    auto it = cache.find(dims);
    if (it != cache.end()) return it->second;
    const int rank = static_cast<int>(dims.size());
    Plans p{fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE),
            fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE)};
    if (!p.fwd || !p.bwd) throw KahlerError("fftw planning failed");
    cache.emplace(dims, p);
    return p;
}

struct Buffer {
    explicit Buffer(std::size_t n) : data(fftw_alloc_complex(n)) {
        if (!data) throw std::bad_alloc();
    }
    ~Buffer() { fftw_free(data); }
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    fftw_complex* data;
};

}  // namespace

TorusSpectral::TorusSpectral(const GridChart& chart) : chart_(chart), size_(chart.node_count()) {
    if (!chart.all_periodic()) throw ChartError("TorusSpectral needs a chart periodic in every axis");
    dims_ = chart.resolution();
}

void TorusSpectral::forward(const double* in, cd* spec) const {
    Buffer buf(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        buf.data[i][0] = in[i];
        buf.data[i][1] = 0.0;
    }
    fftw_execute_dft(nd_plans(dims_, buf.data).fwd, buf.data, buf.data);
    std::copy_n(reinterpret_cast<const cd*>(buf.data), size_, spec);
}

void TorusSpectral::inverse(const cd* spec, cd* out) const {
    Buffer buf(size_);
    std::copy_n(spec, size_, reinterpret_cast<cd*>(buf.data));
    fftw_execute_dft(nd_plans(dims_, buf.data).bwd, buf.data, buf.data);
    const double s = 1.0 / static_cast<double>(size_);
    const cd* b = reinterpret_cast<const cd*>(buf.data);
    for (std::size_t i = 0; i < size_; ++i) out[i] = b[i] * s;
}

double TorusSpectral::wavenumber(std::size_t idx, int axis, bool zero_nyquist) const {
    const int N = dims_[axis];
    const int m = chart_.index(idx, axis);
    if (zero_nyquist && 2 * m == N) return 0.0;
    const int mm = m <= N / 2 ? m : m - N;
    const Axis& ax = chart_.axis(axis);
    return 2.0 * std::numbers::pi * mm / (ax.hi - ax.lo);
}

cd TorusSpectral::dz_symbol(std::size_t idx, int c, bool bar) const {
    const double kx = wavenumber(idx, 2 * c);
    const double ky = wavenumber(idx, 2 * c + 1);
    return bar ? cd(-0.5 * ky, 0.5 * kx) : cd(0.5 * ky, 0.5 * kx);
}

double TorusSpectral::tail_ratio(const cd* spec) const {
    double top = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < size_; ++i) {
        const double a = std::abs(spec[i]);
        top = std::max(top, a);
        bool in_tail = false;
        for (int ax = 0; ax < static_cast<int>(dims_.size()) && !in_tail; ++ax) {
            const int N = dims_[ax];
            const int m = chart_.index(i, ax);
            const int mm = std::abs(m <= N / 2 ? m : m - N);
            in_tail = 4 * mm > N;
        }
        if (in_tail) tail = std::max(tail, a);
    }
    return top > 0.0 ? tail / top : 0.0;
}

}  // namespace kahler
