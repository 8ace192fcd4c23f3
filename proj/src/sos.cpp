#include "qgnlo/sos.hpp"

#include <cmath>
#include <stdexcept>

namespace qgnlo {

MomentMatrix transition_moments(const Spectrum &s, const QuantumGraph &g,
                                Axis axis) {
  const auto n = static_cast<Eigen::Index>(s.size());
  MomentMatrix out;
  out.axis = axis;
  out.r = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      KahanSum acc;
      for (std::size_t p = 0; p < g.edge_count(); ++p) {
        const Edge &e = g.edge(p);
        const Point2 o = g.offset(p);
        const double dir = axis == Axis::x ? std::cos(e.angle) : std::sin(e.angle);
        const double off = axis == Axis::x ? o.x : o.y;
        const auto &ma = s.modes[static_cast<std::size_t>(a)];
        const auto &mb = s.modes[static_cast<std::size_t>(b)];
        acc += dir * edge_overlap(g, p, ma, mb, 1);
        acc += off * edge_overlap(g, p, ma, mb, 0);
      }
      out.r(a, b) = acc.value();
      out.r(b, a) = acc.value();
    }
  }
  return out;
}

namespace {

const MomentMatrix &pick(const MomentMatrix &mx, const MomentMatrix &my, int i) {
  return i == 0 ? mx : my;
}

std::vector<double> excitation_energies(std::span<const double> energies,
                                        Eigen::Index size) {
  if (static_cast<Eigen::Index>(energies.size()) < size)
    throw std::invalid_argument("fewer energies than moment matrix states");
  std::vector<double> e(static_cast<std::size_t>(size));
  for (Eigen::Index n = 1; n < size; ++n) {
    e[static_cast<std::size_t>(n)] = energies[static_cast<std::size_t>(n)] - energies[0];
    if (!(e[static_cast<std::size_t>(n)] > 0.0))
      throw std::domain_error("zero or negative energy denominator E_" +
                              std::to_string(n) + "0");
  }
  return e;
}

} // namespace

Rank3 beta_sos(const MomentMatrix &mx, const MomentMatrix &my,
               std::span<const double> energies) {
  const Eigen::Index size = mx.r.rows();
  const auto e = excitation_energies(energies, size);
  Rank3 base;
  for (std::size_t f = 0; f < Rank3::size; ++f) {
    const auto [i, j, k] = Rank3::unflat(f);
    const auto &ri = pick(mx, my, i);
    const auto &rj = pick(mx, my, j);
    const auto &rk = pick(mx, my, k);
    KahanSum acc;
    for (Eigen::Index n = 1; n < size; ++n)
      for (Eigen::Index m = 1; m < size; ++m)
        acc += ri.r(0, n) * rj.bar(n, m) * rk.r(m, 0) /
               (e[static_cast<std::size_t>(n)] * e[static_cast<std::size_t>(m)]);
    base[f] = acc.value();
  }
  return permutation_sum(base, 0.5);
}

Rank4 gamma_sos(const MomentMatrix &mx, const MomentMatrix &my,
                std::span<const double> energies) {
  const Eigen::Index size = mx.r.rows();
  const auto e = excitation_energies(energies, size);
  Rank4 base;
  for (std::size_t f = 0; f < Rank4::size; ++f) {
    const auto [i, j, k, l] = Rank4::unflat(f);
    const auto &ri = pick(mx, my, i);
    const auto &rj = pick(mx, my, j);
    const auto &rk = pick(mx, my, k);
    const auto &rl = pick(mx, my, l);
    KahanSum three;
    for (Eigen::Index n = 1; n < size; ++n)
      for (Eigen::Index m = 1; m < size; ++m)
        for (Eigen::Index p = 1; p < size; ++p)
          three += ri.r(0, n) * rj.bar(n, m) * rk.bar(m, p) * rl.r(p, 0) /
                   (e[static_cast<std::size_t>(n)] * e[static_cast<std::size_t>(m)] *
                    e[static_cast<std::size_t>(p)]);
    KahanSum two;
    for (Eigen::Index n = 1; n < size; ++n)
      for (Eigen::Index m = 1; m < size; ++m) {
        const double en = e[static_cast<std::size_t>(n)];
        two += ri.r(0, n) * rj.r(n, 0) * rk.r(0, m) * rl.r(m, 0) /
               (en * en * e[static_cast<std::size_t>(m)]);
      }
    base[f] = three.value() - two.value();
  }
  return permutation_sum(base, 1.0 / 6.0);
}

double beta_max(double e10) {
  if (!(e10 > 0.0))
    throw std::domain_error("intrinsic normalization needs E_10 > 0");
  return std::pow(3.0, 0.25) * std::pow(e10, -3.5);
}

double gamma_max(double e10) {
  if (!(e10 > 0.0))
    throw std::domain_error("intrinsic normalization needs E_10 > 0");
  return 4.0 * std::pow(e10, -5.0);
}

PolTensors intrinsic_normalize(const Rank3 &beta, const Rank4 &gamma,
                               double e10) {
  PolTensors out;
  out.beta = beta.scaled(1.0 / beta_max(e10));
  out.gamma = gamma.scaled(1.0 / gamma_max(e10));
  out.units = TensorUnits::intrinsic;
  out.e10 = e10;
  return out;
}

SosResult compute_sos(const QuantumGraph &g, std::size_t excited_modes,
                      const SpectralOptions &opts) {
  SosResult out;
  out.spectrum = find_spectrum(g, excited_modes + 1, opts);
  out.mx = transition_moments(out.spectrum, g, Axis::x);
  out.my = transition_moments(out.spectrum, g, Axis::y);
  const auto energies = out.spectrum.energies();
  out.raw.beta = beta_sos(out.mx, out.my, energies);
  out.raw.gamma = gamma_sos(out.mx, out.my, energies);
  out.raw.e10 = energies.at(1) - energies.at(0);
  out.intrinsic = intrinsic_normalize(out.raw.beta, out.raw.gamma, out.raw.e10);
  out.trk_ground = trk_residual(out.spectrum, out.mx, out.my, 0);
  return out;
}

} // namespace qgnlo
