#pragma once

#include "kahler/chart.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace kahler {

using ChartPtr = std::shared_ptr<const GridChart>;
using SmallMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

inline ChartPtr share(GridChart c) { return std::make_shared<const GridChart>(std::move(c)); }

/// Throws ChartError unless both charts describe the same grid.
void require_same_chart(const GridChart& a, const GridChart& b, const char* where);

enum class Parity { real, complex };

/// One real or complex value per node. Real fields carry no imaginary array.
class ScalarField {
public:
    ScalarField() = default;
    static ScalarField real(ChartPtr chart, std::vector<double> values);
    static ScalarField complex(ChartPtr chart, std::vector<double> re, std::vector<double> im);
    static ScalarField constant(ChartPtr chart, double value);

    template <class F>
    static ScalarField sample(ChartPtr chart, F&& f) {
        std::vector<double> v(chart->node_count());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(i);
        return real(std::move(chart), std::move(v));
    }
    template <class F>
    static ScalarField sample_complex(ChartPtr chart, F&& f) {
        const std::size_t n = chart->node_count();
        std::vector<double> re(n), im(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cd z = f(i);
            re[i] = z.real();
            im[i] = z.imag();
        }
        return complex(std::move(chart), std::move(re), std::move(im));
    }

    const GridChart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    Parity parity() const { return im_.empty() ? Parity::real : Parity::complex; }
    bool is_real() const { return im_.empty(); }
    std::size_t size() const { return re_.size(); }

    const std::vector<double>& re() const { return re_; }
    const std::vector<double>& im() const { return im_; }
    double operator[](std::size_t i) const { return re_[i]; }
    cd value(std::size_t i) const { return im_.empty() ? cd(re_[i], 0.0) : cd(re_[i], im_[i]); }

    double max() const;
    double min() const;
    double sup_abs() const;

    ScalarField real_part() const;
    ScalarField conj() const;

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(double s, const ScalarField& a);
    friend ScalarField operator+(const ScalarField& a, double s);

private:
    ChartPtr chart_;
    std::vector<double> re_;
    std::vector<double> im_;
};

/// Hermitian (1,1)-form coefficients h_{ij}, stored by upper triangle:
/// real diagonals and complex strictly-upper entries, one array per entry.
class Form11Field {
public:
    Form11Field() = default;
    Form11Field(ChartPtr chart, int n);

    template <class F>
    static Form11Field from_function(ChartPtr chart, int n, F&& f) {
        Form11Field h(chart, n);
        for (std::size_t i = 0; i < chart->node_count(); ++i) h.set(i, f(i));
        return h;
    }

    const GridChart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    int n() const { return n_; }
    std::size_t size() const { return chart_ ? chart_->node_count() : 0; }

    cd coeff(std::size_t node, int i, int j) const;
    SmallMatrix matrix(std::size_t node) const;
    /// Stores the Hermitian part of a at this node.
    void set(std::size_t node, const SmallMatrix& a);

    const std::vector<double>& diag(int i) const { return diag_[i]; }
    const std::vector<cd>& off(int i, int j) const { return off_[offset(i, j)]; }
    // Construction-time access; fields are treated as immutable afterwards.
    std::vector<double>& mutable_diag(int i) { return diag_[i]; }
    std::vector<cd>& mutable_off(int i, int j) { return off_[offset(i, j)]; }

    Form11Field scaled(double s) const;
    friend Form11Field operator+(const Form11Field& a, const Form11Field& b);
    friend Form11Field operator-(const Form11Field& a, const Form11Field& b);

    /// Max over nodes and entries of |a - b|.
    static double max_difference(const Form11Field& a, const Form11Field& b);
    /// Max over nodes and entries of |h|.
    double sup_abs() const;

private:
    int offset(int i, int j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

    ChartPtr chart_;
    int n_ = 0;
    std::vector<std::vector<double>> diag_;
    std::vector<std::vector<cd>> off_;
};

/// Smallest eigenvalue of a Hermitian matrix (closed form for n <= 2).
double min_eigenvalue(const SmallMatrix& a);

/// Margins below this are treated as degenerate.
inline constexpr double kMinMargin = 1e-10;

/// A Form11Field that is positive definite everywhere, with the per-node
/// minimum eigenvalue cached.
class MetricField {
public:
    explicit MetricField(Form11Field h);
    static MetricField flat(ChartPtr chart);

    const Form11Field& form() const { return h_; }
    const GridChart& chart() const { return h_.chart(); }
    const ChartPtr& chart_ptr() const { return h_.chart_ptr(); }
    int n() const { return h_.n(); }
    SmallMatrix matrix(std::size_t node) const { return h_.matrix(node); }
    const std::vector<double>& min_eigenvalues() const { return min_eig_; }
    double margin() const { return margin_; }

private:
    Form11Field h_;
    std::vector<double> min_eig_;
    double margin_ = 0.0;
};

/// Curvature components R_{i jbar k lbar}. With pairs a = (i,k), b = (j,l)
/// taken from Sym^2, M_{ab} = R_{i jbar k lbar} is Hermitian, so the Kahler
/// symmetries hold by construction of the packed storage.
class CurvatureField {
public:
    CurvatureField(ChartPtr chart, int n);

    const GridChart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    int n() const { return n_; }
    int pairs() const { return m_; }
    static int pair_index(int i, int k, int n);

    cd component(std::size_t node, int i, int j, int k, int l) const;
    cd packed(std::size_t node, int a, int b) const;
    void set_packed(std::size_t node, int a, int b, cd v);  // a <= b
    const std::vector<double>& norm() const { return norm_; }
    std::vector<double>& mutable_norm() { return norm_; }
    ScalarField norm_field() const;
    /// Largest relative departure from the Kahler symmetries seen before
    /// symmetrization.
    double symmetry_defect = 0.0;

private:
    ChartPtr chart_;
    int n_;
    int m_;
    std::vector<double> data_;
    std::vector<double> norm_;
};

}  // namespace kahler
