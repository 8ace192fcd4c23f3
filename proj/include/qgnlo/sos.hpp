#pragma once

// Truncated sum-over-states hyperpolarizabilities (hbar = m = e = 1).

#include "qgnlo/graph.hpp"
#include "qgnlo/spectrum.hpp"
#include "qgnlo/tensors.hpp"

#include <Eigen/Dense>

#include <span>

namespace qgnlo {

/// r^i_nm over the truncated basis; real and symmetric.
struct MomentMatrix {
  Axis axis = Axis::x;
  Eigen::MatrixXd r;

  /// r_nm - delta_nm r_00
  double bar(Eigen::Index n, Eigen::Index m) const {
    return n == m ? r(n, m) - r(0, 0) : r(n, m);
  }
};

/// x_nm = sum_p [cos(theta_p) int s phi_n phi_m ds + x_0p <n|m>_p], in closed
/// form per edge; y analogous.
MomentMatrix transition_moments(const Spectrum &s, const QuantumGraph &g,
                                Axis axis);

/// beta_ijk = (1/2) P_ijk sum'_{nm} r^i_0n rbar^j_nm r^k_m0 / (E_n0 E_m0).
Rank3 beta_sos(const MomentMatrix &mx, const MomentMatrix &my,
               std::span<const double> energies);

/// gamma_ijkl = (1/6) P_ijkl [ sum'_{nmp} r^i_0n rbar^j_nm rbar^k_mp r^l_p0
///   / (E_n0 E_m0 E_p0) - sum'_{nm} r^i_0n r^j_n0 r^k_0m r^l_m0 / (E_n0^2 E_m0) ].
Rank4 gamma_sos(const MomentMatrix &mx, const MomentMatrix &my,
                std::span<const double> energies);

/// One-electron fundamental limits for first gap E_10.
double beta_max(double e10);
double gamma_max(double e10);

PolTensors intrinsic_normalize(const Rank3 &beta, const Rank4 &gamma, double e10);

/// Whole pipeline: spectrum with `excited_modes` + 1 states, moments, tensors.
struct SosResult {
  Spectrum spectrum;
  MomentMatrix mx, my;
  PolTensors raw;
  PolTensors intrinsic;
  double trk_ground = 0.0;
};

SosResult compute_sos(const QuantumGraph &g, std::size_t excited_modes,
                      const SpectralOptions &opts = {});

} // namespace qgnlo
