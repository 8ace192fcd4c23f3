#pragma once

// Dalgarno-Lewis hyperpolarizabilities of a quantum graph from its ground
// state alone.
//
// F_i solves d/ds(psi0^2 dF/ds) = 2 rbar^i psi0^2 on every edge, with F
// continuous at interior vertices and psi0^2 F' conserved there. Per edge
//
//   F(s) = F(0) + 2 int_0^s ds' / psi0(s')^2 [ int_0^s' rbar psi0^2 + C_p ]
//
// where the first constants C_p are fixed by the vertex flux balance (and by
// loop closure on graphs with cycles). G_ij solves the same equation with the
// source rbar^i F_j - <0|rbar^i F_j|0>. Both are gauge-shifted to zero ground
// expectation.

#include "qgnlo/graph.hpp"
#include "qgnlo/numerics.hpp"
#include "qgnlo/spectrum.hpp"
#include "qgnlo/tensors.hpp"

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace qgnlo {

class DLError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Per-edge samples on each edge's uniform grid.
using EdgeSamples = std::vector<std::vector<double>>;

/// Ground state sampled on the common grid together with the projected
/// coordinates r^i and rbar^i = r^i - r^i_00.
class GroundGrid {
public:
  GroundGrid(const QuantumGraph &g, const Mode &ground, std::size_t points);

  const QuantumGraph &graph() const { return graph_; }
  const Mode &ground() const { return ground_; }
  std::size_t points() const { return points_; }
  double step(std::size_t p) const { return steps_[p]; }
  const EdgeSamples &psi() const { return psi_; }
  const EdgeSamples &psi2() const { return psi2_; }
  const EdgeSamples &coord(Axis a) const { return coord_[static_cast<int>(a)]; }
  const EdgeSamples &bar(Axis a) const { return bar_[static_cast<int>(a)]; }
  /// r^i_00
  double mean(Axis a) const { return mean_[static_cast<int>(a)]; }
  bool tail_is_leaf(std::size_t p) const;
  bool head_is_leaf(std::size_t p) const;

private:
  QuantumGraph graph_;
  Mode ground_;
  std::size_t points_;
  std::vector<double> steps_;
  EdgeSamples psi_, psi2_;
  std::array<EdgeSamples, 2> coord_, bar_;
  std::array<double, 2> mean_{};
};

/// Sum over edges of the integral of the pointwise product of the factors
/// times psi0^2. Plain real products; no operator-adjoint signs.
double expectation(const GroundGrid &ctx,
                   std::initializer_list<const EdgeSamples *> factors);

struct EdgeMoment {
  std::size_t edge = 0;
  Axis axis = Axis::x;
  double value = 0.0; // int rbar psi0^2 over the edge
};

std::vector<EdgeMoment> edge_moments(const GroundGrid &ctx, Axis axis);

/// F value change across an interior edge as a function of its constant:
/// F(a) - F(0) = weight * C_p + offset.
struct EdgeTransfer {
  double weight = 0.0;
  double offset = 0.0;
};

struct FluxSolution {
  std::vector<double> constants;  // C_p (or D_p) per edge
  std::vector<double> potentials; // field value per vertex; leaves unset (0)
};

/// Solves leaf conditions, vertex flux balance and, on graphs with cycles,
/// value continuity around every cycle. `transfers` is indexed by edge and
/// only read for edges with two interior ends; it may be empty for trees.
/// `source_scale` (e.g. the integral of |source| psi0^2) sets the absolute
/// consistency tolerance when the moments themselves are tiny.
FluxSolution solve_field_constants(const QuantumGraph &g,
                                   std::span<const double> moments,
                                   std::span<const EdgeTransfer> transfers,
                                   double source_scale = 0.0);

/// Flux constants of a tree from its edge moments.
std::vector<double> solve_flux_constants(const QuantumGraph &g,
                                         std::span<const EdgeMoment> moments);

enum class FieldKind { F, G };

struct DLField {
  FieldKind kind = FieldKind::F;
  Axis i = Axis::x;
  Axis j = Axis::x; // second axis for G_ij
  EdgeSamples values;
  /// psi0^2 dF/ds / 2 on the grid (the first integral).
  EdgeSamples flux;
  std::vector<double> constants;   // C_p or D_p
  std::vector<double> tail_values; // F^(p)(0) after the gauge shift
  double gauge_shift = 0.0;
  double source_mean = 0.0; // <0|rbar^i F_j|0> for G, 0 for F

  /// dF/ds at node `node` of edge p (0 at Dirichlet leaf nodes).
  double derivative(const GroundGrid &ctx, std::size_t p, std::size_t node) const;
};

/// General vertex-system construction for any graph.
DLField build_F(const GroundGrid &ctx, Axis axis);
DLField build_G(const GroundGrid &ctx, const DLField &f_j, Axis i);

/// Sequential quadrature around a pure cycle with the periodic first constant.
DLField build_F_loop(const GroundGrid &ctx, Axis axis);
DLField build_G_loop(const GroundGrid &ctx, const DLField &f_j, Axis i);

struct FieldResiduals {
  double continuity = 0.0; // relative to max |field|
  double flux = 0.0;       // relative to max |dfield/ds| at vertices
  double gauge = 0.0;      // |<0|field|0>| relative to max |field|
};

FieldResiduals field_residuals(const GroundGrid &ctx, const DLField &f);

/// beta_ijk = (1/2) P_ijk <F_i rbar^j F_k> with plain products, which is the
/// printed -(1/2) P_ijk <0|F_i rbar^j F_k|0> once the bra-side sign of the
/// anti-Hermitian F is applied.
Rank3 beta_dl(const GroundGrid &ctx, const std::array<DLField, 2> &f);

/// gamma_ijkl = (1/6) P_ijkl [ -<F_i rbar^j G_kl> + <F_i F_j><rbar^k F_l> ]
/// in plain products (bra-side F and F F each carry one sign).
Rank4 gamma_dl(const GroundGrid &ctx, const std::array<DLField, 2> &f,
               const std::array<std::array<DLField, 2>, 2> &g);

struct DLOptions {
  std::size_t grid_points = 2001;
  SpectralOptions spectral;
  /// Use the vertex system even on pure cycles.
  bool force_general = false;
};

struct DLResult {
  double e0 = 0.0;
  double e10 = 0.0;
  std::array<DLField, 2> f;
  std::array<std::array<DLField, 2>, 2> g;
  PolTensors raw;
  PolTensors intrinsic;
  double max_continuity_residual = 0.0;
  double max_flux_residual = 0.0;
  bool loop_path = false;
};

/// Ground state + first gap, all six fields and both tensors.
DLResult compute_dl(const QuantumGraph &g, const DLOptions &opts = {});

/// Fields and tensors for a given ground state (no spectral solve).
DLResult compute_dl_fields(const GroundGrid &ctx, double e10, bool force_general);

} // namespace qgnlo
