#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace kahler {

using cd = std::complex<double>;

/// Multiply stored (1,1) coefficients by this to get the Riemannian metric
/// tensor: the stored convention is omega = (i/2pi) h dz^dzbar while the
/// fundamental form of a metric g is (i/2) g dz^dzbar.
inline constexpr double kRiemannianPerForm = 1.0 / 3.14159265358979323846;

enum class ChartKind { torus, patch, annulus, product };
enum class FiberKind { torus, patch };

struct Axis {
    bool periodic = true;
    double lo = 0.0;
    double hi = 1.0;
    int count = 8;

    double spacing() const { return periodic ? (hi - lo) / count : (hi - lo) / (count - 1); }
    double coordinate(int i) const { return lo + i * spacing(); }
    bool operator==(const Axis&) const = default;
};

/// A uniform tensor grid over 2n real axes; axis pairs (2c, 2c+1) form the
/// complex coordinate z_c. On annulus/product charts z_1 is stored in
/// log-polar form: axis 0 is t = log|z_1| (non-periodic, endpoints included),
/// axis 1 the angle. Nodes are row-major with axis 0 slowest.
class GridChart {
public:
    static GridChart torus(int n, int resolution, double period = 1.0);
    static GridChart torus(std::vector<int> resolution, std::vector<double> periods);
    /// Non-periodic square [-half_width, half_width]^{2n}.
    static GridChart patch(int n, int resolution, double half_width);
    static GridChart annulus(double r_min, double r_max, int radial, int angular);
    /// Log-polar factor times an (n-1)-dimensional fiber. A torus fiber has
    /// period `fiber_extent`; a patch fiber spans [-fiber_extent, fiber_extent].
    static GridChart product(double r_min, double r_max, int radial, int angular, int fiber_dim,
                             int fiber_resolution, FiberKind fiber, double fiber_extent);

    /// Rebuild a chart from its axes (used by deserialization).
    static GridChart from_axes(ChartKind kind, FiberKind fiber, std::vector<Axis> axes, int fd_order);

    GridChart with_fd_order(int order) const;

    ChartKind kind() const { return kind_; }
    FiberKind fiber_kind() const { return fiber_kind_; }
    int n() const { return n_; }
    int axis_count() const { return 2 * n_; }
    const Axis& axis(int a) const { return axes_[a]; }
    int count(int a) const { return axes_[a].count; }
    std::size_t stride(int a) const { return strides_[a]; }
    std::size_t node_count() const { return nodes_; }
    int fd_order() const { return fd_order_; }

    /// True when z_1 is stored in log-polar coordinates.
    bool log_polar() const { return kind_ == ChartKind::annulus || kind_ == ChartKind::product; }
    bool periodic(int a) const { return axes_[a].periodic; }
    bool all_periodic() const;

    int index(std::size_t node, int a) const {
        return static_cast<int>((node / strides_[a]) % static_cast<std::size_t>(axes_[a].count));
    }
    double coordinate(std::size_t node, int a) const { return axes_[a].coordinate(index(node, a)); }
    cd z(std::size_t node, int c) const;
    /// |z_1| on log-polar charts; |z| of the first coordinate otherwise.
    double radius(std::size_t node) const;
    double radius_at(int radial_index) const;
    int radial_count() const { return axes_[0].count; }
    std::size_t row_size() const { return strides_[0]; }

    double r_min() const;
    double r_max() const;

    /// One-dimensional quadrature weights along axis a (periodic: h; else
    /// Gregory-corrected trapezoid).
    const std::vector<double>& weights(int a) const { return weights_[a]; }
    /// Lebesgue measure dx dy of the z_1 plane per unit of (t, theta): r^2.
    double jacobian(std::size_t node) const;
    /// Full product weight times Jacobian: sum_i node_weight(i) f(i) is the
    /// Lebesgue integral of f over the chart.
    double node_weight(std::size_t node) const;

    std::string kind_name() const;
    std::vector<int> resolution() const;

    bool operator==(const GridChart& o) const;
    bool operator!=(const GridChart& o) const { return !(*this == o); }

private:
    GridChart() = default;
    void finish();

    ChartKind kind_ = ChartKind::torus;
    FiberKind fiber_kind_ = FiberKind::torus;
    int n_ = 1;
    int fd_order_ = 8;
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t nodes_ = 0;
    std::vector<std::vector<double>> weights_;
};

}  // namespace kahler
