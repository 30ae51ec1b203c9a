#include "kahler/chart.hpp"

#include "kahler/error.hpp"
#include "kahler/stencil.hpp"

#include <cmath>
#include <numbers>

namespace kahler {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ChartError(msg);
}

Axis periodic_axis(double period, int count) { return Axis{true, 0.0, period, count}; }

Axis angle_axis(int count) { return Axis{true, 0.0, 2.0 * std::numbers::pi, count}; }

}  // namespace

GridChart GridChart::torus(int n, int resolution, double period) {
    return torus(std::vector<int>(2 * n, resolution), std::vector<double>(2 * n, period));
}

GridChart GridChart::torus(std::vector<int> resolution, std::vector<double> periods) {
    require(!resolution.empty() && resolution.size() % 2 == 0, "torus: need an even number of real axes");
    require(periods.size() == resolution.size(), "torus: one period per axis");
    GridChart c;
    c.kind_ = ChartKind::torus;
    c.n_ = static_cast<int>(resolution.size() / 2);
    for (std::size_t a = 0; a < resolution.size(); ++a) {
        require(periods[a] > 0.0, "torus: periods must be positive");
        c.axes_.push_back(periodic_axis(periods[a], resolution[a]));
    }
    c.finish();
    return c;
}

GridChart GridChart::patch(int n, int resolution, double half_width) {
    require(n >= 1, "patch: n >= 1");
    require(half_width > 0.0, "patch: half width must be positive");
    GridChart c;
    c.kind_ = ChartKind::patch;
    c.n_ = n;
    for (int a = 0; a < 2 * n; ++a) c.axes_.push_back(Axis{false, -half_width, half_width, resolution});
    c.finish();
    return c;
}

GridChart GridChart::annulus(double r_min, double r_max, int radial, int angular) {
    require(r_min > 0.0 && r_min < r_max, "annulus: need 0 < r_min < r_max");
    require(r_max < 1.0, "annulus: r_max must be below 1");
    GridChart c;
    c.kind_ = ChartKind::annulus;
    c.n_ = 1;
    c.axes_.push_back(Axis{false, std::log(r_min), std::log(r_max), radial});
    c.axes_.push_back(angle_axis(angular));
    c.finish();
    return c;
}

GridChart GridChart::product(double r_min, double r_max, int radial, int angular, int fiber_dim,
                             int fiber_resolution, FiberKind fiber, double fiber_extent) {
    require(fiber_dim >= 1, "product: fiber dimension >= 1");
    require(fiber_extent > 0.0, "product: fiber extent must be positive");
    GridChart c = annulus(r_min, r_max, radial, angular);
    c.kind_ = ChartKind::product;
    c.fiber_kind_ = fiber;
    c.n_ = 1 + fiber_dim;
    for (int a = 0; a < 2 * fiber_dim; ++a) {
        if (fiber == FiberKind::torus)
            c.axes_.push_back(periodic_axis(fiber_extent, fiber_resolution));
        else
            c.axes_.push_back(Axis{false, -fiber_extent, fiber_extent, fiber_resolution});
    }
    c.finish();
    return c;
}

GridChart GridChart::from_axes(ChartKind kind, FiberKind fiber, std::vector<Axis> axes, int fd_order) {
    require(axes.size() % 2 == 0 && !axes.empty(), "chart: need an even number of axes");
    GridChart c;
    c.kind_ = kind;
    c.fiber_kind_ = fiber;
    c.n_ = static_cast<int>(axes.size() / 2);
    c.axes_ = std::move(axes);
    if (c.log_polar()) {
        require(!c.axes_[0].periodic && c.axes_[1].periodic, "chart: log-polar axes malformed");
        require(c.axes_[0].lo < c.axes_[0].hi && c.axes_[0].hi < 0.0, "chart: need 0 < r_min < r_max < 1");
    }
    for (const auto& ax : c.axes_) require(ax.hi > ax.lo, "chart: empty axis");
    c.finish();
    return c.with_fd_order(fd_order);
}

GridChart GridChart::with_fd_order(int order) const {
    require(order >= 2 && order <= 12 && order % 2 == 0, "fd order must be even in [2, 12]");
    GridChart c = *this;
    c.fd_order_ = order;
    return c;
}

void GridChart::finish() {
    require(n_ >= 1 && n_ <= 4, "complex dimension must be in [1, 4]");
    require(static_cast<int>(axes_.size()) == 2 * n_, "total real dimension must be 2n");
    for (const auto& ax : axes_) require(ax.count >= 8, "resolution must be >= 8 per axis");
    strides_.assign(axes_.size(), 1);
    for (int a = static_cast<int>(axes_.size()) - 2; a >= 0; --a)
        strides_[a] = strides_[a + 1] * static_cast<std::size_t>(axes_[a + 1].count);
    nodes_ = strides_[0] * static_cast<std::size_t>(axes_[0].count);
    weights_.clear();
    for (const auto& ax : axes_) {
        if (ax.periodic)
            weights_.emplace_back(ax.count, ax.spacing());
        else
            weights_.push_back(gregory_weights(ax.count, ax.spacing()));
    }
}

bool GridChart::all_periodic() const {
    for (const auto& ax : axes_)
        if (!ax.periodic) return false;
    return true;
}

cd GridChart::z(std::size_t node, int c) const {
    const double u = coordinate(node, 2 * c);
    const double v = coordinate(node, 2 * c + 1);
    if (c == 0 && log_polar()) return std::polar(std::exp(u), v);
    return {u, v};
}

double GridChart::radius(std::size_t node) const {
    if (log_polar()) return std::exp(coordinate(node, 0));
    return std::abs(z(node, 0));
}

double GridChart::radius_at(int radial_index) const {
    return std::exp(axes_[0].coordinate(radial_index));
}

double GridChart::r_min() const { return log_polar() ? std::exp(axes_[0].lo) : 0.0; }
double GridChart::r_max() const { return log_polar() ? std::exp(axes_[0].hi) : 0.0; }

double GridChart::jacobian(std::size_t node) const {
    if (!log_polar()) return 1.0;
    const double r = radius(node);
    return r * r;
}

double GridChart::node_weight(std::size_t node) const {
    double w = jacobian(node);
    for (int a = 0; a < axis_count(); ++a) w *= weights_[a][index(node, a)];
    return w;
}

std::string GridChart::kind_name() const {
    switch (kind_) {
        case ChartKind::torus: return "torus";
        case ChartKind::patch: return "patch";
        case ChartKind::annulus: return "log-polar-annulus";
        case ChartKind::product: return "product";
    }
    return "unknown";
}

std::vector<int> GridChart::resolution() const {
    std::vector<int> r;
    for (const auto& ax : axes_) r.push_back(ax.count);
    return r;
}

bool GridChart::operator==(const GridChart& o) const {
    return kind_ == o.kind_ && n_ == o.n_ && fd_order_ == o.fd_order_ && axes_ == o.axes_ &&
           (kind_ != ChartKind::product || fiber_kind_ == o.fiber_kind_);
}

}  // namespace kahler
