#pragma once

#include "kahler/chart.hpp"

#include <vector>

namespace kahler {

/// Full multi-dimensional FFT on a torus chart. Used for the fast ddbar,
/// the spectral-tail diagnostic and constant-coefficient inversions.
class TorusSpectral {
public:
    explicit TorusSpectral(const GridChart& chart);

    std::size_t size() const { return size_; }
    /// Unnormalized forward transform of a real field.
    void forward(const double* in, cd* spec) const;
    /// Normalized inverse transform.
    void inverse(const cd* spec, cd* out) const;

    /// Wavenumber of spectral index `idx` along real axis a (0 at Nyquist
    /// when `zero_nyquist`).
    double wavenumber(std::size_t idx, int axis, bool zero_nyquist = true) const;
    /// Symbol of d/dz_c or d/dzbar_c.
    cd dz_symbol(std::size_t idx, int c, bool bar) const;
    /// Largest |coefficient| with some |mode| above a quarter of its axis
    /// resolution, divided by the largest |coefficient| overall.
    double tail_ratio(const cd* spec) const;

private:
    GridChart chart_;
    std::vector<int> dims_;
    std::size_t size_;
};

}  // namespace kahler
