#include "qgnlo/spectrum.hpp"
#include "qgnlo/sos.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>

namespace qgnlo {

double EdgeWave::value(double k, double s) const {
  return a_sin * std::sin(k * s) + b_cos * std::cos(k * s);
}

double EdgeWave::derivative(double k, double s) const {
  return k * (a_sin * std::cos(k * s) - b_cos * std::sin(k * s));
}

std::vector<double> Mode::sample(const QuantumGraph &g, std::size_t edge,
                                 std::size_t points) const {
  const UniformGrid grid(g.edge(edge).length, points);
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = value(edge, grid.at(i));
  return out;
}

std::vector<double> Spectrum::energies() const {
  std::vector<double> e;
  e.reserve(modes.size());
  for (const auto &m : modes)
    e.push_back(m.energy);
  return e;
}

Spectrum Spectrum::truncated(std::size_t count) const {
  Spectrum out;
  for (const auto &lv : levels) {
    if (out.modes.size() >= count)
      break;
    out.levels.push_back(lv);
    for (std::size_t i = 0; i < lv.multiplicity; ++i)
      out.modes.push_back(modes[lv.first_mode + i]);
  }
  return out;
}

Eigen::MatrixXd secular_matrix(const QuantumGraph &g, double k) {
  if (!(k > 0.0))
    throw SpectralError("secular_matrix requires k > 0");
  const std::size_t ne = g.edge_count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * ne, 2 * ne);
  Eigen::Index row = 0;

  // value of edge p at the given end as a row of (A_p, B_p) coefficients
  auto value_coeffs = [&](const Incidence &inc) {
    const double a = g.edge(inc.edge).length;
    return inc.end == EdgeEnd::tail ? std::pair{0.0, 1.0}
                                    : std::pair{std::sin(k * a), std::cos(k * a)};
  };
  // outgoing derivative divided by k
  auto flux_coeffs = [&](const Incidence &inc) {
    const double a = g.edge(inc.edge).length;
    return inc.end == EdgeEnd::tail
               ? std::pair{1.0, 0.0}
               : std::pair{-std::cos(k * a), std::sin(k * a)};
  };

  for (const auto &v : g.vertices()) {
    if (v.is_leaf()) {
      const auto [ca, cb] = value_coeffs(v.incident[0]);
      const auto p = static_cast<Eigen::Index>(v.incident[0].edge);
      m(row, 2 * p) = ca;
      m(row, 2 * p + 1) = cb;
      ++row;
      continue;
    }
    const auto &first = v.incident[0];
    const auto [fa, fb] = value_coeffs(first);
    for (std::size_t j = 1; j < v.incident.size(); ++j) {
      const auto [ca, cb] = value_coeffs(v.incident[j]);
      const auto p0 = static_cast<Eigen::Index>(first.edge);
      const auto pj = static_cast<Eigen::Index>(v.incident[j].edge);
      m(row, 2 * p0) += fa;
      m(row, 2 * p0 + 1) += fb;
      m(row, 2 * pj) -= ca;
      m(row, 2 * pj + 1) -= cb;
      ++row;
    }
    for (const auto &inc : v.incident) {
      const auto [ca, cb] = flux_coeffs(inc);
      const auto p = static_cast<Eigen::Index>(inc.edge);
      m(row, 2 * p) += ca;
      m(row, 2 * p + 1) += cb;
    }
    ++row;
  }
  return m;
}

namespace {

double secular_det(const QuantumGraph &g, double k) {
  return secular_matrix(g, k).partialPivLu().determinant();
}

double relative_sigma_min(const QuantumGraph &g, double k) {
  const Eigen::MatrixXd m = secular_matrix(g, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto &sv = svd.singularValues();
  return sv(sv.size() - 1) / sv(0);
}

std::complex<double> exp_moment(double q, double a, int power) {
  // integral_0^a s^power exp(i q s) ds
  if (power < 0)
    throw SpectralError("edge moment power must be non-negative");
  const std::complex<double> iq(0.0, q);
  if (std::abs(q * a) < 1.0) {
    std::complex<double> sum = 0.0;
    std::complex<double> term = 1.0; // (iq a)^n / n!
    for (int n = 0; n < 40; ++n) {
      sum += term * std::pow(a, power + 1) / static_cast<double>(n + power + 1);
      term *= iq * a / static_cast<double>(n + 1);
    }
    return sum;
  }
  // I_p = a^p e^{iqa} / (iq) - p / (iq) I_{p-1}
  const std::complex<double> e = std::exp(iq * a);
  std::complex<double> moment = (e - 1.0) / iq;
  for (int p = 1; p <= power; ++p)
    moment = std::pow(a, p) * e / iq - static_cast<double>(p) / iq * moment;
  return moment;
}

double wave_overlap(const EdgeWave &u, double ku, const EdgeWave &v, double kv,
                    double a, int power) {
  const std::complex<double> cu(u.b_cos, -u.a_sin);
  const std::complex<double> cv(v.b_cos, -v.a_sin);
  const auto plus = cu * cv * exp_moment(ku + kv, a, power);
  const auto minus = cu * std::conj(cv) * exp_moment(ku - kv, a, power);
  return 0.5 * (plus.real() + minus.real());
}

struct Root {
  double k;
  bool from_sign_change;
};

// Finds every root of the secular problem in the scanned window, tracking
// sign changes of det M(k) (odd order) and dips of sigma_min (even order).
class RootScanner {
public:
  RootScanner(const QuantumGraph &g, const SpectralOptions &opts)
      : g_(g), opts_(opts),
        step_(opts.scan_step_factor * std::numbers::pi / g.total_length()) {}

  double step() const { return step_; }

  void extend(std::size_t nodes) {
    while (k_.size() < nodes) {
      const double k = static_cast<double>(k_.size() + 1) * step_;
      k_.push_back(k);
      det_.push_back(secular_det(g_, k));
      smin_.push_back(relative_sigma_min(g_, k));
    }
  }

  // Roots in (k_[i], k_[i+1]] plus even-order dips at node i+1.
  void process_interval(std::size_t i, std::vector<Root> &roots) const {
    const double a = k_[i], b = k_[i + 1];
    auto det = [&](double k) { return secular_det(g_, k); };
    if (det_[i + 1] == 0.0 ||
        (det_[i] != 0.0 && std::signbit(det_[i]) != std::signbit(det_[i + 1])))
      roots.push_back({bisect(det, a, b, opts_.root_rel_tol), true});

    if (i + 2 >= k_.size())
      return;
    const std::size_t c = i + 1;
    const bool dip = smin_[c] < smin_[c - 1] && smin_[c] <= smin_[c + 1];
    if (!dip)
      return;
    // resolve roots hiding between the coarse nodes
    const double lo = k_[c - 1], hi = k_[c + 1];
    const int n = opts_.refine_subdivisions;
    std::vector<double> ks(n + 1), ds(n + 1), ss(n + 1);
    for (int j = 0; j <= n; ++j) {
      ks[j] = lo + (hi - lo) * j / n;
      ds[j] = secular_det(g_, ks[j]);
      ss[j] = relative_sigma_min(g_, ks[j]);
    }
    for (int j = 0; j < n; ++j)
      if (ds[j] != 0.0 && ds[j + 1] != 0.0 &&
          std::signbit(ds[j]) != std::signbit(ds[j + 1]))
        roots.push_back({bisect(det, ks[j], ks[j + 1], opts_.root_rel_tol), true});
    auto sig = [&](double k) { return relative_sigma_min(g_, k); };
    auto flips = [&](int j) {
      return ds[j] != 0.0 && ds[j + 1] != 0.0 && std::signbit(ds[j]) != std::signbit(ds[j + 1]);
    };
    for (int j = 1; j < n; ++j) {
      if (!(ss[j] <= ss[j - 1] && ss[j] <= ss[j + 1]))
        continue;
      // a minimum next to a sign change is the simple root bisected above
      if (flips(j - 1) || flips(j))
        continue;
      const double kmin = golden_minimize(sig, ks[j - 1], ks[j + 1], 1e-15);
      if (sig(kmin) < opts_.svd_threshold)
        roots.push_back({kmin, false});
    }
  }

private:
  const QuantumGraph &g_;
  const SpectralOptions &opts_;
  double step_;
  std::vector<double> k_, det_, smin_;
};

std::vector<EdgeWave> waves_from_vector(const Eigen::VectorXd &v,
                                        std::size_t ne) {
  std::vector<EdgeWave> waves(ne);
  for (std::size_t p = 0; p < ne; ++p)
    waves[p] = {p, v(static_cast<Eigen::Index>(2 * p)),
                v(static_cast<Eigen::Index>(2 * p + 1))};
  return waves;
}

// L2-orthonormalizes the null vectors of one level (Cholesky of the Gram
// matrix is Gram-Schmidt in column order) and fixes a deterministic sign.
std::vector<Mode> level_modes(const QuantumGraph &g, double k,
                              const Eigen::MatrixXd &null_basis,
                              std::size_t level) {
  const std::size_t ne = g.edge_count();
  const auto d = static_cast<std::size_t>(null_basis.cols());
  std::vector<Mode> raw(d);
  for (std::size_t c = 0; c < d; ++c) {
    raw[c].k = k;
    raw[c].energy = 0.5 * k * k;
    raw[c].level = level;
    raw[c].waves = waves_from_vector(null_basis.col(static_cast<Eigen::Index>(c)), ne);
  }
  Eigen::MatrixXd gram(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      gram(a, b) = inner_product(g, raw[a], raw[b]);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SpectralError("degenerate subspace Gram matrix is not positive definite");
  // new basis = raw * L^{-T}
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd tinv =
      l.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
  std::vector<Mode> out(d);
  for (std::size_t c = 0; c < d; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * ne);
    for (std::size_t r = 0; r < d; ++r)
      v += null_basis.col(static_cast<Eigen::Index>(r)) * tinv(r, c);
    // largest coefficient positive
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0)
      v = -v;
    out[c] = raw[c];
    out[c].waves = waves_from_vector(v, ne);
  }
  return out;
}

} // namespace

double edge_overlap(const QuantumGraph &g, std::size_t p, const Mode &u,
                    const Mode &v, int power) {
  return wave_overlap(u.waves[p], u.k, v.waves[p], v.k, g.edge(p).length, power);
}

double inner_product(const QuantumGraph &g, const Mode &u, const Mode &v) {
  KahanSum acc;
  for (std::size_t p = 0; p < g.edge_count(); ++p)
    acc += edge_overlap(g, p, u, v, 0);
  return acc.value();
}

Spectrum find_spectrum(const QuantumGraph &g, std::size_t count,
                       const SpectralOptions &opts) {
  if (count < 1)
    throw SpectralError("find_spectrum: mode count must be positive");
  const std::size_t ne = g.edge_count();
  Spectrum out;

  if (g.leaf_count() == 0) {
    // constant zero-energy mode of a leafless graph
    Mode zero;
    zero.k = 0.0;
    zero.energy = 0.0;
    zero.level = 0;
    zero.waves.resize(ne);
    const double c = 1.0 / std::sqrt(g.total_length());
    for (std::size_t p = 0; p < ne; ++p)
      zero.waves[p] = {p, 0.0, c};
    out.levels.push_back({0.0, 0.0, 1, 0, 1.0});
    out.modes.push_back(zero);
  }

  RootScanner scanner(g, opts);
  // Weyl count ~ k L / pi, generous margin before declaring failure
  const double k_limit =
      4.0 * (static_cast<double>(count + 2 * ne) + 10.0) * std::numbers::pi /
      g.total_length();
  const auto max_nodes = static_cast<std::size_t>(k_limit / scanner.step()) + 3;

  std::vector<Root> pending;
  std::size_t processed = 0; // intervals handled
  const std::size_t chunk = 32;

  // Turns a cluster of candidate roots into a level with its orthonormal modes.
  auto finalize = [&](std::span<const Root> cluster) {
    double best_k = cluster.front().k;
    double best_s = relative_sigma_min(g, best_k);
    bool sign_change = false;
    for (const auto &r : cluster) {
      sign_change = sign_change || r.from_sign_change;
      const double s = relative_sigma_min(g, r.k);
      if (s < best_s) {
        best_s = s;
        best_k = r.k;
      }
    }
    const NullSpace ns = null_space(secular_matrix(g, best_k), opts.svd_threshold);
    Eigen::MatrixXd basis = ns.basis;
    if (basis.cols() == 0) {
      if (!sign_change)
        return;
      // odd-order root resolved only to the bisection tolerance
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(secular_matrix(g, best_k),
                                            Eigen::ComputeFullV);
      basis = svd.matrixV().rightCols(1);
    }
    const auto rank = ns.singular_values.size() - basis.cols();
    const double retained =
        rank > 0 ? ns.singular_values(rank - 1) / ns.singular_values(0) : 0.0;
    if (retained < 10.0 * opts.svd_threshold) {
      std::ostringstream msg;
      msg << "ill-conditioned null space at k = " << best_k
          << ": retained sigma " << retained << ", threshold "
          << opts.svd_threshold << ", null dimension " << basis.cols();
      throw SpectralError(msg.str());
    }
    Level lv;
    lv.k = best_k;
    lv.energy = 0.5 * best_k * best_k;
    lv.multiplicity = static_cast<std::size_t>(basis.cols());
    lv.first_mode = out.modes.size();
    lv.retained_sigma = retained;
    auto modes = level_modes(g, best_k, basis, out.levels.size());
    out.levels.push_back(lv);
    out.modes.insert(out.modes.end(), modes.begin(), modes.end());
  };

  while (out.modes.size() < count) {
    if (processed + 2 >= max_nodes) {
      std::ostringstream msg;
      msg << "root scan exhausted window k <= " << k_limit << " with "
          << out.modes.size() << " of " << count << " modes";
      throw SpectralError(msg.str());
    }
    const std::size_t want = std::min(max_nodes, processed + chunk + 2);
    scanner.extend(want);
    for (; processed + 2 < want; ++processed)
      scanner.process_interval(processed, pending);
    std::sort(pending.begin(), pending.end(),
              [](const Root &a, const Root &b) { return a.k < b.k; });

    // roots below this bound can no longer gain cluster members
    const double settled = (static_cast<double>(processed) - 1.0) * scanner.step();
    std::size_t i = 0;
    while (i < pending.size() && out.modes.size() < count) {
      std::size_t j = i + 1;
      while (j < pending.size() && pending[j].k - pending[j - 1].k <= 1e-9 * pending[j].k)
        ++j;
      if (pending[j - 1].k >= settled)
        break;
      finalize(std::span<const Root>(pending.data() + i, j - i));
      i = j;
    }
    pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(i));
  }
  out = out.truncated(count);

  // ground state non-negative
  Mode &g0 = out.modes.front();
  KahanSum area;
  for (std::size_t p = 0; p < ne; ++p) {
    const double a = g.edge(p).length;
    const auto &w = g0.waves[p];
    if (g0.k == 0.0)
      area += w.b_cos * a;
    else
      area += (w.a_sin * (1.0 - std::cos(g0.k * a)) + w.b_cos * std::sin(g0.k * a)) / g0.k;
  }
  if (area.value() < 0.0)
    for (auto &w : g0.waves) {
      w.a_sin = -w.a_sin;
      w.b_cos = -w.b_cos;
    }
  return out;
}

Mode ground_state(const QuantumGraph &g, const SpectralOptions &opts) {
  return find_spectrum(g, 1, opts).modes.front();
}

double vertex_residual(const QuantumGraph &g, const Mode &m) {
  double amp = 0.0;
  for (const auto &w : m.waves)
    amp = std::max({amp, std::abs(w.a_sin), std::abs(w.b_cos)});
  if (amp == 0.0)
    return 0.0;
  const double kscale = m.k > 0.0 ? m.k : 1.0;
  double worst = 0.0;
  for (const auto &v : g.vertices()) {
    auto end_s = [&](const Incidence &inc) {
      return inc.end == EdgeEnd::tail ? 0.0 : g.edge(inc.edge).length;
    };
    if (v.is_leaf()) {
      const auto &inc = v.incident[0];
      worst = std::max(worst, std::abs(m.value(inc.edge, end_s(inc))));
      continue;
    }
    const double v0 = m.value(v.incident[0].edge, end_s(v.incident[0]));
    double flux = 0.0;
    for (const auto &inc : v.incident) {
      worst = std::max(worst, std::abs(m.value(inc.edge, end_s(inc)) - v0));
      const double d = m.derivative(inc.edge, end_s(inc));
      flux += inc.end == EdgeEnd::tail ? d : -d;
    }
    worst = std::max(worst, std::abs(flux) / kscale);
  }
  return worst / amp;
}

double trk_residual(const Spectrum &s, const MomentMatrix &mx,
                    const MomentMatrix &my, std::size_t n) {
  KahanSum acc;
  const auto size = static_cast<std::size_t>(mx.r.rows());
  for (std::size_t m = 0; m < size; ++m) {
    const double emn = s.modes[m].energy - s.modes[n].energy;
    const auto ni = static_cast<Eigen::Index>(n), mi = static_cast<Eigen::Index>(m);
    acc += emn * (mx.r(ni, mi) * mx.r(mi, ni) + my.r(ni, mi) * my.r(mi, ni));
  }
  return std::abs(acc.value() - 0.5);
}

} // namespace qgnlo
