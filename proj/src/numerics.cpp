#include "qgnlo/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace qgnlo {

UniformGrid::UniformGrid(double length_, std::size_t points_)
    : length(length_), points(points_) {
  if (points < 3 || (points - 1) % 2 != 0)
    throw NumericalError("grid needs an odd number (>= 3) of points, got " +
                         std::to_string(points));
  if (!(length > 0.0))
    throw NumericalError("grid length must be positive");
}

namespace {

void check_simpson_size(std::size_t n) {
  if (n < 3 || (n - 1) % 2 != 0)
    throw NumericalError("Simpson rule needs an even number of intervals, got " +
                         std::to_string(n == 0 ? 0 : n - 1));
}

} // namespace

double simpson(std::span<const double> values, double h) {
  check_simpson_size(values.size());
  KahanSum acc;
  const std::size_t n = values.size();
  acc += values[0];
  acc += values[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i)
    acc += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  return acc.value() * h / 3.0;
}

std::vector<double> cumulative_simpson(std::span<const double> values,
                                       double h) {
  check_simpson_size(values.size());
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  KahanSum acc;
  for (std::size_t i = 0; i + 2 < n; i += 2) {
    const double f0 = values[i], f1 = values[i + 1], f2 = values[i + 2];
    out[i + 1] = acc.value() + h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
    acc += h / 3.0 * (f0 + 4.0 * f1 + f2);
    out[i + 2] = acc.value();
  }
  return out;
}

std::vector<double> reverse_cumulative_simpson(std::span<const double> values,
                                               double h) {
  std::vector<double> reversed(values.rbegin(), values.rend());
  auto out = cumulative_simpson(reversed, h);
  std::reverse(out.begin(), out.end());
  return out;
}

double bisect(const std::function<double(double)> &f, double a, double b,
              double rel_tol) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0)
    return a;
  if (fb == 0.0)
    return b;
  if (std::signbit(fa) == std::signbit(fb))
    throw NumericalError("bisect: interval does not bracket a sign change");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b)) ||
        mid == a || mid == b)
      break;
    const double fm = f(mid);
    if (fm == 0.0)
      return mid;
    if (std::signbit(fm) == std::signbit(fa)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

double golden_minimize(const std::function<double(double)> &f, double a,
                       double b, double rel_tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 300; ++it) {
    if (std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b)))
      break;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

std::vector<double> bracket_and_bisect(const std::function<double(double)> &f,
                                       double lo, double hi, double step,
                                       double rel_tol) {
  if (!(step > 0.0) || !(hi > lo))
    throw NumericalError("bracket_and_bisect: empty window or bad step");
  std::vector<double> roots;
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  double prev_k = lo;
  double prev_f = f(lo);
  for (std::size_t i = 1; i <= count; ++i) {
    const double k = std::min(hi, lo + static_cast<double>(i) * step);
    const double fk = f(k);
    if (fk == 0.0) {
      roots.push_back(k);
    } else if (prev_f != 0.0 && std::signbit(prev_f) != std::signbit(fk)) {
      roots.push_back(bisect(f, prev_k, k, rel_tol));
    }
    prev_k = k;
    prev_f = fk;
  }
  return roots;
}

std::vector<double> bracket_and_bisect(const std::function<double(double)> &f,
                                       double lo, double hi, double step,
                                       double rel_tol, std::size_t min_roots) {
  auto roots = bracket_and_bisect(f, lo, hi, step, rel_tol);
  if (roots.size() < min_roots)
    throw NumericalError("root scan exhausted window (" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "] with " +
                         std::to_string(roots.size()) + " of " +
                         std::to_string(min_roots) + " roots");
  return roots;
}

NullSpace null_space(const Eigen::MatrixXd &m, double rel_threshold) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i]))
      throw NumericalError("null_space: non-finite matrix entry");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  NullSpace out;
  out.singular_values = svd.singularValues();
  const Eigen::Index n = m.cols();
  const double smax = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  const double cut = rel_threshold * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > cut)
      ++rank;
  out.basis = svd.matrixV().rightCols(n - rank);
  out.condition = rank > 0 ? smax / out.singular_values(rank - 1) : 0.0;
  return out;
}

Eigen::VectorXd solve_dense(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                            double rel_tol, double scale_floor) {
  if (a.rows() != b.size())
    throw NumericalError("solve_dense: dimension mismatch");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < a.cols())
    throw NumericalError("solve_dense: singular system (rank " +
                         std::to_string(qr.rank()) + " of " +
                         std::to_string(a.cols()) + ")");
  Eigen::VectorXd x = qr.solve(b);
  const double scale = std::max(a.norm() * x.norm() + b.norm(), scale_floor);
  const double resid = (a * x - b).norm();
  if (resid > rel_tol * std::max(scale, 1e-300))
    throw NumericalError("solve_dense: inconsistent system, residual " +
                         std::to_string(resid));
  return x;
}

} // namespace qgnlo
