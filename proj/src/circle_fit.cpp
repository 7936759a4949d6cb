#include "pmufdi/circle_fit.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace pmufdi {

CircleFit fit_circle(std::span<const Phasor> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 3) throw std::invalid_argument("circle fit needs at least 3 points");
  // Three points leave B with 3 rows; a zero row keeps the SVD square.
  Eigen::Matrix<double, Eigen::Dynamic, 4> b =
      Eigen::Matrix<double, Eigen::Dynamic, 4>::Zero(std::max<Eigen::Index>(n, 4), 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Phasor z = points[static_cast<std::size_t>(i)];
    require_finite(z, "circle fit");
    const double x = z.real();
    const double y = z.imag();
    b(i, 0) = x * x + y * y;
    b(i, 1) = x;
    b(i, 2) = y;
    b(i, 3) = 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 4>> svd(b, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) <= 1e-12 * s(0)) {
    throw DegenerateFitError("circle fit is not unique (coincident or too few distinct points)");
  }
  const Eigen::Vector4d u = svd.matrixV().col(3).normalized();
  const double a = u(0);
  if (std::abs(a) < 1e-12) {
    throw DegenerateFitError("points are collinear; no finite circle");
  }
  CircleFit fit;
  fit.coeffs = {u(0), u(1), u(2), u(3)};
  const double cx = -u(1) / (2.0 * a);
  const double cy = -u(2) / (2.0 * a);
  const double radicand = (u(1) * u(1) + u(2) * u(2)) / (4.0 * a * a) - u(3) / a;
  if (!(radicand >= 0.0) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw DegenerateFitError("fitted conic is not a real circle");
  }
  fit.center = Phasor(cx, cy);
  fit.radius = std::sqrt(radicand);
  fit.condition = s(3);
  return fit;
}

double algebraic_residual(std::span<const Phasor> points, Phasor center,
                          double radius) {
  Eigen::Vector4d u(1.0, -2.0 * center.real(), -2.0 * center.imag(),
                    std::norm(center) - radius * radius);
  u.normalize();
  double ss = 0.0;
  for (const Phasor z : points) {
    const double r = u(0) * std::norm(z) + u(1) * z.real() + u(2) * z.imag() + u(3);
    ss += r * r;
  }
  return std::sqrt(ss);
}

}  // namespace pmufdi
