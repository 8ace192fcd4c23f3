#pragma once

// Deterministic numerical kernels shared by the spectral, SOS and DL code:
// composite Simpson quadrature, running integrals, root bracketing,
// SVD null spaces and small dense solves.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgnlo {

/// Raised when a numerical routine cannot honour its contract.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated accumulator.
class KahanSum {
public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  KahanSum &operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Uniform grid of `points` samples covering [0, length]. The number of
/// intervals (points - 1) must be even so Simpson panels tile it exactly.
struct UniformGrid {
  double length = 0.0;
  std::size_t points = 0;

  UniformGrid() = default;
  UniformGrid(double length_, std::size_t points_);

  double step() const { return length / static_cast<double>(points - 1); }
  double at(std::size_t i) const {
    // endpoint is exact so vertex samples line up across edges
    return i + 1 == points ? length : static_cast<double>(i) * step();
  }
};

/// Composite Simpson integral of equally spaced samples with spacing h.
double simpson(std::span<const double> values, double h);

/// Running Simpson integral: out[i] = integral of the samples from node 0 to
/// node i. Even nodes use whole panels; odd nodes add the half-panel rule
/// h/12 (5 f0 + 8 f1 - f2), which keeps the O(h^4) order. out[0] = 0.
std::vector<double> cumulative_simpson(std::span<const double> values, double h);

/// Running integral measured from the last node: out[i] = integral from
/// node i to the end.
std::vector<double> reverse_cumulative_simpson(std::span<const double> values,
                                               double h);

/// Bisection on a sign-changing bracket [a, b] down to |b - a| <= rel_tol * |b|.
double bisect(const std::function<double(double)> &f, double a, double b,
              double rel_tol);

/// Golden-section minimum of a unimodal function on [a, b].
double golden_minimize(const std::function<double(double)> &f, double a,
                       double b, double rel_tol);

/// Scans (lo, hi] with the given step and bisects every sign change.
/// Exact zeros on grid nodes are reported as roots.
std::vector<double> bracket_and_bisect(const std::function<double(double)> &f,
                                       double lo, double hi, double step,
                                       double rel_tol);

/// As above but throws NumericalError if fewer than `min_roots` are found.
std::vector<double> bracket_and_bisect(const std::function<double(double)> &f,
                                       double lo, double hi, double step,
                                       double rel_tol, std::size_t min_roots);

struct NullSpace {
  Eigen::MatrixXd basis;           // orthonormal columns
  Eigen::VectorXd singular_values; // descending
  double condition = 0.0;          // sigma_max / smallest retained sigma
};

/// SVD null space: right singular vectors whose singular value is below
/// rel_threshold * sigma_max.
NullSpace null_space(const Eigen::MatrixXd &m, double rel_threshold = 1e-8);

/// Least-squares solution of a consistent (possibly over-determined) system.
/// Throws NumericalError when the residual exceeds rel_tol times the scale of
/// the problem (at least `scale_floor`) or the system is rank deficient.
Eigen::VectorXd solve_dense(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                            double rel_tol = 1e-9, double scale_floor = 0.0);

} // namespace qgnlo
