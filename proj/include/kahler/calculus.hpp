#pragma once

#include "kahler/chart.hpp"
#include "kahler/stencil.hpp"

#include <vector>

namespace kahler {

/// Half-open range of axis-0 indices ("rows"). Every derivative routine
/// takes its input as a contiguous run of rows and writes another run, so
/// large grids can be processed in slabs.
struct RowRange {
    int lo = 0;
    int hi = 0;
    int size() const { return hi - lo; }
    bool contains(RowRange o) const { return lo <= o.lo && o.hi <= hi; }
};

/// Derivatives on a chart. Periodic axes are differentiated spectrally
/// (FFTW), non-periodic axes with high-order finite differences.
///
/// Arrays are raw doubles with `ncomp` = 1 (real) or 2 (interleaved complex)
/// values per node, laid out like the chart's nodes restricted to the given
/// rows.
class Calculus {
public:
    explicit Calculus(const GridChart& chart);

    const GridChart& chart() const { return chart_; }
    RowRange all_rows() const { return {0, chart_.radial_count()}; }
    /// Rows an axis-0 derivative needs to produce `out`.
    RowRange halo(RowRange out) const;
    /// Partition of all rows into slabs of about `rows` rows (one slab when
    /// axis 0 is periodic).
    std::vector<RowRange> slabs(int rows) const;

    void partial(const double* in, RowRange in_rows, double* out, RowRange out_rows, int axis, int order,
                 int ncomp) const;

    /// d/dz_c (bar = false) or d/dzbar_c (bar = true). Output is complex.
    void dz(const double* in, int ncomp, RowRange in_rows, cd* out, RowRange out_rows, int c, bool bar) const;
    /// d/dz_c d/dzbar_c; output has the same ncomp as the input.
    void laplace_pair(const double* in, int ncomp, RowRange in_rows, double* out, RowRange out_rows, int c) const;
    /// d/dz_c d/dzbar_d for c != d. Output is complex.
    void mixed(const double* in, int ncomp, RowRange in_rows, cd* out, RowRange out_rows, int c, int d) const;

    /// Spectral-tail ratio of a full-grid array along a periodic axis: the
    /// largest |coefficient| with |mode| > N/4 over the largest overall.
    double tail_ratio(const double* in, int ncomp, int axis) const;

    // Full-grid conveniences.
    std::vector<double> partial(const std::vector<double>& in, int axis, int order) const;
    std::vector<cd> dz(const std::vector<double>& in, int c, bool bar) const;
    std::vector<cd> dz(const std::vector<cd>& in, int c, bool bar) const;

private:
    void fd_axis0(const double* in, RowRange in_rows, double* out, RowRange out_rows, const FdTable& t,
                  int ncomp) const;
    void fd_inner(const double* in, double* out, std::size_t values, int axis, const FdTable& t,
                  int ncomp) const;
    void spectral(const double* in, RowRange in_rows, double* out, RowRange out_rows, int axis, int order,
                  int ncomp) const;
    RowRange halo_once(RowRange out) const;
    const FdTable& table(int axis, int order) const { return tables_[axis][order - 1]; }

    GridChart chart_;
    std::vector<std::vector<FdTable>> tables_;
    std::vector<double> row_radius_;
    std::vector<cd> phase_;  // e^{i theta} per angular index on log-polar charts
};

}  // namespace kahler
