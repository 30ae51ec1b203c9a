#include "kahler/field.hpp"

#include "kahler/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kahler {

void require_same_chart(const GridChart& a, const GridChart& b, const char* where) {
    if (&a != &b && a != b) throw ChartError(std::string(where) + ": fields live on different charts");
}

// ---------------------------------------------------------------- ScalarField

ScalarField ScalarField::real(ChartPtr chart, std::vector<double> values) {
    if (!chart) throw FieldError("scalar field without chart");
    if (values.size() != chart->node_count()) throw FieldError("value count differs from node count");
    ScalarField f;
    f.chart_ = std::move(chart);
    f.re_ = std::move(values);
    return f;
}

ScalarField ScalarField::complex(ChartPtr chart, std::vector<double> re, std::vector<double> im) {
    ScalarField f = real(std::move(chart), std::move(re));
    if (im.size() != f.re_.size()) throw FieldError("imaginary part has wrong size");
    f.im_ = std::move(im);
    return f;
}

ScalarField ScalarField::constant(ChartPtr chart, double value) {
    const std::size_t n = chart->node_count();
    return real(std::move(chart), std::vector<double>(n, value));
}

double ScalarField::max() const { return *std::max_element(re_.begin(), re_.end()); }
double ScalarField::min() const { return *std::min_element(re_.begin(), re_.end()); }

double ScalarField::sup_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < re_.size(); ++i) m = std::max(m, std::abs(value(i)));
    return m;
}

ScalarField ScalarField::real_part() const { return real(chart_, re_); }

ScalarField ScalarField::conj() const {
    if (is_real()) return *this;
    std::vector<double> im(im_.size());
    for (std::size_t i = 0; i < im.size(); ++i) im[i] = -im_[i];
    return complex(chart_, re_, std::move(im));
}

namespace {
ScalarField combine(const ScalarField& a, const ScalarField& b, double sb) {
    require_same_chart(a.chart(), b.chart(), "scalar arithmetic");
    std::vector<double> re(a.size());
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = a.re()[i] + sb * b.re()[i];
    if (a.is_real() && b.is_real()) return ScalarField::real(a.chart_ptr(), std::move(re));
    std::vector<double> im(a.size(), 0.0);
    for (std::size_t i = 0; i < im.size(); ++i) im[i] = a.value(i).imag() + sb * b.value(i).imag();
    return ScalarField::complex(a.chart_ptr(), std::move(re), std::move(im));
}
}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) { return combine(a, b, 1.0); }
ScalarField operator-(const ScalarField& a, const ScalarField& b) { return combine(a, b, -1.0); }

ScalarField operator*(double s, const ScalarField& a) {
    std::vector<double> re(a.re_);
    for (double& v : re) v *= s;
    if (a.is_real()) return ScalarField::real(a.chart_, std::move(re));
    std::vector<double> im(a.im_);
    for (double& v : im) v *= s;
    return ScalarField::complex(a.chart_, std::move(re), std::move(im));
}

ScalarField operator+(const ScalarField& a, double s) {
    std::vector<double> re(a.re_);
    for (double& v : re) v += s;
    if (a.is_real()) return ScalarField::real(a.chart_, std::move(re));
    return ScalarField::complex(a.chart_, std::move(re), a.im_);
}

// ---------------------------------------------------------------- Form11Field

Form11Field::Form11Field(ChartPtr chart, int n) : chart_(std::move(chart)), n_(n) {
    if (!chart_) throw FieldError("form without chart");
    if (n < 1 || n > 4) throw FieldError("form dimension must be in [1, 4]");
    const std::size_t N = chart_->node_count();
    diag_.assign(n, std::vector<double>(N, 0.0));
    off_.assign(n * (n - 1) / 2, std::vector<cd>(N, cd(0.0, 0.0)));
}

cd Form11Field::coeff(std::size_t node, int i, int j) const {
    if (i == j) return {diag_[i][node], 0.0};
    if (i < j) return off_[offset(i, j)][node];
    return std::conj(off_[offset(j, i)][node]);
}

SmallMatrix Form11Field::matrix(std::size_t node) const {
    SmallMatrix a(n_, n_);
    for (int i = 0; i < n_; ++i) {
        a(i, i) = diag_[i][node];
        for (int j = i + 1; j < n_; ++j) {
            a(i, j) = off_[offset(i, j)][node];
            a(j, i) = std::conj(a(i, j));
        }
    }
    return a;
}

void Form11Field::set(std::size_t node, const SmallMatrix& a) {
    for (int i = 0; i < n_; ++i) {
        diag_[i][node] = a(i, i).real();
        for (int j = i + 1; j < n_; ++j) off_[offset(i, j)][node] = 0.5 * (a(i, j) + std::conj(a(j, i)));
    }
}

Form11Field Form11Field::scaled(double s) const {
    Form11Field r = *this;
    for (auto& d : r.diag_)
        for (double& v : d) v *= s;
    for (auto& o : r.off_)
        for (cd& v : o) v *= s;
    return r;
}

namespace {
Form11Field combine(const Form11Field& a, const Form11Field& b, double sb) {
    require_same_chart(a.chart(), b.chart(), "form arithmetic");
    if (a.n() != b.n()) throw FieldError("form arithmetic: dimension mismatch");
    Form11Field r = a;
    for (int i = 0; i < a.n(); ++i) {
        auto& d = r.mutable_diag(i);
        const auto& e = b.diag(i);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += sb * e[k];
        for (int j = i + 1; j < a.n(); ++j) {
            auto& o = r.mutable_off(i, j);
            const auto& p = b.off(i, j);
            for (std::size_t k = 0; k < o.size(); ++k) o[k] += sb * p[k];
        }
    }
    return r;
}
}  // namespace

Form11Field operator+(const Form11Field& a, const Form11Field& b) { return combine(a, b, 1.0); }
Form11Field operator-(const Form11Field& a, const Form11Field& b) { return combine(a, b, -1.0); }

double Form11Field::max_difference(const Form11Field& a, const Form11Field& b) {
    return (a - b).sup_abs();
}

double Form11Field::sup_abs() const {
    double m = 0.0;
    for (const auto& d : diag_)
        for (double v : d) m = std::max(m, std::abs(v));
    for (const auto& o : off_)
        for (cd v : o) m = std::max(m, std::abs(v));
    return m;
}

double min_eigenvalue(const SmallMatrix& a) {
    const auto n = a.rows();
    if (n == 1) return a(0, 0).real();
    if (n == 2) {
        const double p = a(0, 0).real(), q = a(1, 1).real();
        const double h = 0.5 * (p - q);
        const double big = 0.5 * (p + q) + std::sqrt(h * h + std::norm(a(0, 1)));
        // det / largest avoids cancellation when the scales differ widely
        return big > 0.0 ? (p * q - std::norm(a(0, 1))) / big : 0.5 * (p + q) - (big - 0.5 * (p + q));
    }
    Eigen::SelfAdjointEigenSolver<SmallMatrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// ---------------------------------------------------------------- MetricField

MetricField::MetricField(Form11Field h) : h_(std::move(h)) {
    const std::size_t N = h_.size();
    min_eig_.resize(N);
    margin_ = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < N; ++i) {
        min_eig_[i] = min_eigenvalue(h_.matrix(i));
        if (!(min_eig_[i] >= margin_)) {
            margin_ = min_eig_[i];
            worst = i;
        }
    }
    if (!(margin_ >= kMinMargin)) {
        double safe_r = 0.0;
        const GridChart& c = h_.chart();
        if (c.log_polar()) {
            // largest r such that every node at radius <= r is positive
            const std::size_t row = c.row_size();
            for (int k = 0; k < c.radial_count(); ++k) {
                bool ok = true;
                for (std::size_t q = 0; q < row && ok; ++q) ok = min_eig_[k * row + q] >= kMinMargin;
                if (!ok) break;
                safe_r = c.radius_at(k);
            }
        }
        std::ostringstream msg;
        msg << "metric not positive definite: min eigenvalue " << margin_ << " at node " << worst;
        if (c.log_polar()) msg << " (r = " << c.radius(worst) << "); positive for r <= " << safe_r;
        throw PositivityError(msg.str(), worst, margin_, min_eig_, safe_r);
    }
}

MetricField MetricField::flat(ChartPtr chart) {
    const int n = chart->n();
    Form11Field h(chart, n);
    for (int i = 0; i < n; ++i) std::fill(h.mutable_diag(i).begin(), h.mutable_diag(i).end(), 1.0);
    return MetricField(std::move(h));
}

// ---------------------------------------------------------------- CurvatureField

CurvatureField::CurvatureField(ChartPtr chart, int n)
    : chart_(std::move(chart)), n_(n), m_(n * (n + 1) / 2) {
    data_.assign(chart_->node_count() * static_cast<std::size_t>(m_ * m_), 0.0);
    norm_.assign(chart_->node_count(), 0.0);
}

int CurvatureField::pair_index(int i, int k, int n) {
    if (i > k) std::swap(i, k);
    return i * n - i * (i - 1) / 2 + (k - i);
}

namespace {
// Offset of (a, b), a <= b, inside a node's m*m doubles: diagonal entries
// take one slot, off-diagonal entries two.
int slot(int a, int b, int m) {
    int s = 0;
    for (int r = 0; r < a; ++r) s += 1 + 2 * (m - r - 1);
    return s + (a == b ? 0 : 1 + 2 * (b - a - 1));
}
}  // namespace

cd CurvatureField::packed(std::size_t node, int a, int b) const {
    const bool swap = a > b;
    if (swap) std::swap(a, b);
    const double* p = data_.data() + node * static_cast<std::size_t>(m_ * m_) + slot(a, b, m_);
    if (a == b) return {p[0], 0.0};
    return swap ? cd(p[0], -p[1]) : cd(p[0], p[1]);
}

void CurvatureField::set_packed(std::size_t node, int a, int b, cd v) {
    double* p = data_.data() + node * static_cast<std::size_t>(m_ * m_) + slot(a, b, m_);
    p[0] = v.real();
    if (a != b) p[1] = v.imag();
}

cd CurvatureField::component(std::size_t node, int i, int j, int k, int l) const {
    return packed(node, pair_index(i, k, n_), pair_index(j, l, n_));
}

ScalarField CurvatureField::norm_field() const { return ScalarField::real(chart_, norm_); }

}  // namespace kahler
