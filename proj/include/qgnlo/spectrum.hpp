#pragma once

// Free-particle eigenproblem on a quantum graph with Dirichlet leaves and
// continuity + Kirchhoff interior vertices (hbar = m = 1, E = k^2 / 2).

#include "qgnlo/graph.hpp"
#include "qgnlo/numerics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qgnlo {

class SpectralError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// phi(s) = a_sin sin(k s) + b_cos cos(k s) on one edge.
struct EdgeWave {
  std::size_t edge = 0;
  double a_sin = 0.0;
  double b_cos = 0.0;

  double value(double k, double s) const;
  double derivative(double k, double s) const;
};

struct Mode {
  double k = 0.0;
  double energy = 0.0;
  std::size_t level = 0;
  std::vector<EdgeWave> waves; // one per edge, in edge order

  double value(std::size_t edge, double s) const { return waves[edge].value(k, s); }
  double derivative(std::size_t edge, double s) const {
    return waves[edge].derivative(k, s);
  }
  /// Samples on the uniform grid of the given edge.
  std::vector<double> sample(const QuantumGraph &g, std::size_t edge,
                             std::size_t points) const;
};

struct Level {
  double k = 0.0;
  double energy = 0.0;
  std::size_t multiplicity = 1;
  std::size_t first_mode = 0;
  /// Smallest retained singular value of M(k) relative to the largest; the
  /// distance of the null space from the rank threshold.
  double retained_sigma = 0.0;
};

struct Spectrum {
  std::vector<Level> levels;
  std::vector<Mode> modes; // mode 0 is the ground state

  std::size_t size() const { return modes.size(); }
  const Mode &ground() const { return modes.front(); }
  std::vector<double> energies() const;
  /// Keeps the first `count` modes (plus the rest of a split multiplet).
  Spectrum truncated(std::size_t count) const;
};

struct SpectralOptions {
  /// Scan step is scan_step_factor * pi / total_length.
  double scan_step_factor = 0.25;
  double root_rel_tol = 1e-12;
  double svd_threshold = 1e-8;
  /// Sub-intervals used to resolve close roots around a singular-value dip.
  int refine_subdivisions = 64;
};

/// Secular matrix acting on the stacked (A_p, B_p). Rows: one Dirichlet row
/// per leaf, degree-1 continuity rows and one flux row (divided by k) per
/// interior vertex.
Eigen::MatrixXd secular_matrix(const QuantumGraph &g, double k);

/// The lowest `count` modes with multiplicities; a degenerate multiplet that
/// straddles the cut is completed. Modes are L2-normalized over the graph and
/// degenerate subspaces orthonormalized in column order.
Spectrum find_spectrum(const QuantumGraph &g, std::size_t count,
                       const SpectralOptions &opts = {});

/// Lowest mode only, sign fixed so that it is non-negative.
Mode ground_state(const QuantumGraph &g, const SpectralOptions &opts = {});

/// Integral over edge p of s^power phi_u(s) phi_v(s), in closed form.
double edge_overlap(const QuantumGraph &g, std::size_t p, const Mode &u,
                    const Mode &v, int power);

/// <u|v> summed over edges.
double inner_product(const QuantumGraph &g, const Mode &u, const Mode &v);

/// Largest violation of value continuity and of flux conservation (flux
/// scaled by 1/k) over interior vertices, plus leaf values, relative to the
/// largest edge amplitude.
double vertex_residual(const QuantumGraph &g, const Mode &m);

struct MomentMatrix;

/// |sum_m E_mn (x_nm x_mn + y_nm y_mn) - 1/2| over the truncated basis.
double trk_residual(const Spectrum &s, const MomentMatrix &mx,
                    const MomentMatrix &my, std::size_t n);

} // namespace qgnlo
