#include "qgnlo/dl.hpp"
#include "qgnlo/sos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qgnlo {

GroundGrid::GroundGrid(const QuantumGraph &g, const Mode &ground,
                       std::size_t points)
    : graph_(g), ground_(ground), points_(points) {
  const std::size_t ne = g.edge_count();
  psi_.resize(ne);
  psi2_.resize(ne);
  for (auto &c : coord_)
    c.resize(ne);
  for (auto &b : bar_)
    b.resize(ne);
  for (std::size_t p = 0; p < ne; ++p) {
    const UniformGrid grid(g.edge(p).length, points);
    steps_.push_back(grid.step());
    psi_[p] = ground.sample(g, p, points);
    if (tail_is_leaf(p))
      psi_[p].front() = 0.0;
    if (head_is_leaf(p))
      psi_[p].back() = 0.0;
    for (Axis a : kAxes) {
      auto &c = coord_[static_cast<int>(a)][p];
      c.resize(points);
      for (std::size_t i = 0; i < points; ++i)
        c[i] = g.project(p, grid.at(i), a);
    }
  }
  // normalize on the grid so that <0|1|0> = 1 holds for this quadrature
  KahanSum norm;
  for (std::size_t p = 0; p < ne; ++p) {
    psi2_[p].resize(points);
    for (std::size_t i = 0; i < points; ++i)
      psi2_[p][i] = psi_[p][i] * psi_[p][i];
    norm += simpson(psi2_[p], steps_[p]);
  }
  const double scale = 1.0 / std::sqrt(norm.value());
  for (std::size_t p = 0; p < ne; ++p)
    for (std::size_t i = 0; i < points; ++i) {
      psi_[p][i] *= scale;
      psi2_[p][i] = psi_[p][i] * psi_[p][i];
    }
  for (Axis a : kAxes) {
    const int ai = static_cast<int>(a);
    mean_[ai] = expectation(*this, {&coord_[ai]});
    for (std::size_t p = 0; p < ne; ++p) {
      bar_[ai][p] = coord_[ai][p];
      for (double &v : bar_[ai][p])
        v -= mean_[ai];
    }
  }
}

bool GroundGrid::tail_is_leaf(std::size_t p) const {
  return graph_.vertex(graph_.edge(p).tail).is_leaf();
}

bool GroundGrid::head_is_leaf(std::size_t p) const {
  return graph_.vertex(graph_.edge(p).head).is_leaf();
}

double expectation(const GroundGrid &ctx,
                   std::initializer_list<const EdgeSamples *> factors) {
  KahanSum acc;
  const std::size_t n = ctx.points();
  std::vector<double> prod(n);
  for (std::size_t p = 0; p < ctx.graph().edge_count(); ++p) {
    prod = ctx.psi2()[p];
    for (const EdgeSamples *f : factors) {
      const auto &fp = (*f)[p];
      if (fp.size() != n)
        throw DLError("expectation: factor sampled on a different grid");
      for (std::size_t i = 0; i < n; ++i)
        prod[i] *= fp[i];
    }
    acc += simpson(prod, ctx.step(p));
  }
  return acc.value();
}

std::vector<EdgeMoment> edge_moments(const GroundGrid &ctx, Axis axis) {
  std::vector<EdgeMoment> out;
  const auto &bar = ctx.bar(axis);
  std::vector<double> f(ctx.points());
  for (std::size_t p = 0; p < ctx.graph().edge_count(); ++p) {
    for (std::size_t i = 0; i < f.size(); ++i)
      f[i] = bar[p][i] * ctx.psi2()[p][i];
    out.push_back({p, axis, simpson(f, ctx.step(p))});
  }
  return out;
}

FluxSolution solve_field_constants(const QuantumGraph &g,
                                   std::span<const double> moments,
                                   std::span<const EdgeTransfer> transfers,
                                   double source_scale) {
  const std::size_t ne = g.edge_count();
  const std::size_t nv = g.vertex_count();
  if (moments.size() != ne)
    throw DLError("solve_field_constants: one moment per edge required");

  // unknowns: C_p for every edge, then a potential per interior vertex
  std::vector<Eigen::Index> vcol(nv, -1);
  Eigen::Index cols = static_cast<Eigen::Index>(ne);
  std::size_t anchor = nv;
  for (std::size_t v = 0; v < nv; ++v)
    if (!g.vertex(v).is_leaf()) {
      vcol[v] = cols++;
      if (anchor == nv)
        anchor = v;
    }

  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  std::vector<double> rhs;
  auto cidx = [](std::size_t p) { return static_cast<Eigen::Index>(p); };

  for (std::size_t v = 0; v < nv; ++v) {
    const Vertex &vx = g.vertex(v);
    if (vx.is_leaf()) {
      const Incidence inc = vx.incident[0];
      // psi0 vanishes at the leaf, so the flux through it does too
      rows.push_back({{cidx(inc.edge), 1.0}});
      rhs.push_back(inc.end == EdgeEnd::tail ? 0.0 : -moments[inc.edge]);
      continue;
    }
    // flux leaving v into edges (tail: C_p) equals flux arriving (head: C_p + m_p)
    std::vector<std::pair<Eigen::Index, double>> row;
    double b = 0.0;
    for (const auto &inc : vx.incident) {
      if (inc.end == EdgeEnd::tail) {
        row.push_back({cidx(inc.edge), 1.0});
      } else {
        row.push_back({cidx(inc.edge), -1.0});
        b += moments[inc.edge];
      }
    }
    rows.push_back(std::move(row));
    rhs.push_back(b);
  }
  for (std::size_t p = 0; p < ne; ++p) {
    const Edge &e = g.edge(p);
    if (g.vertex(e.tail).is_leaf() || g.vertex(e.head).is_leaf())
      continue;
    if (transfers.size() != ne) {
      if (g.cycle_rank() == 0)
        continue; // a tree's constants are fixed by the flux rows alone
      throw DLError("solve_field_constants: graph has cycles, edge transfers required");
    }
    rows.push_back({{vcol[e.head], 1.0}, {vcol[e.tail], -1.0}, {cidx(p), -transfers[p].weight}});
    rhs.push_back(transfers[p].offset);
  }
  const bool with_potentials = transfers.size() == ne && anchor < nv;
  if (with_potentials) {
    rows.push_back({{vcol[anchor], 1.0}});
    rhs.push_back(0.0);
  }
  const Eigen::Index ncols = with_potentials ? cols : static_cast<Eigen::Index>(ne);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), ncols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto &[c, v] : rows[r]) {
      if (c >= ncols)
        continue;
      a(static_cast<Eigen::Index>(r), c) += v;
    }
    b(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  Eigen::VectorXd x;
  try {
    double scale = source_scale;
    for (double m : moments)
      scale += std::abs(m);
    x = solve_dense(a, b, 1e-10, scale);
  } catch (const NumericalError &e) {
    throw DLError(std::string("flux constant system: ") + e.what());
  }
  FluxSolution out;
  out.constants.assign(x.data(), x.data() + ne);
  out.potentials.assign(nv, 0.0);
  if (with_potentials)
    for (std::size_t v = 0; v < nv; ++v)
      if (vcol[v] >= 0)
        out.potentials[v] = x(vcol[v]);
  return out;
}

std::vector<double> solve_flux_constants(const QuantumGraph &g,
                                         std::span<const EdgeMoment> moments) {
  std::vector<double> m(g.edge_count(), 0.0);
  if (moments.size() != g.edge_count())
    throw DLError("solve_flux_constants: one moment per edge required");
  for (const auto &em : moments)
    m.at(em.edge) = em.value;
  return solve_field_constants(g, m, {}).constants;
}

double DLField::derivative(const GroundGrid &ctx, std::size_t p,
                           std::size_t node) const {
  const double w = ctx.psi2()[p][node];
  if (w == 0.0)
    return 0.0;
  return 2.0 * flux[p][node] / w;
}

namespace {

// 2 J / psi0^2 with the leaf limit 0 where psi0 vanishes.
std::vector<double> outer_integrand(std::span<const double> j,
                                    std::span<const double> psi2) {
  std::vector<double> out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out[i] = psi2[i] == 0.0 ? 0.0 : 2.0 * j[i] / psi2[i];
  return out;
}

std::vector<double> times_psi2(const GroundGrid &ctx, std::size_t p,
                               std::span<const double> src) {
  std::vector<double> f(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    f[i] = src[i] * ctx.psi2()[p][i];
  return f;
}

void apply_gauge(const GroundGrid &ctx, DLField &field) {
  const double mean = expectation(ctx, {&field.values});
  field.gauge_shift = -mean;
  for (std::size_t p = 0; p < field.values.size(); ++p) {
    for (double &v : field.values[p])
      v -= mean;
    field.tail_values[p] = field.values[p].front();
  }
}

DLField build_general(const GroundGrid &ctx, const EdgeSamples &source) {
  const QuantumGraph &g = ctx.graph();
  const std::size_t ne = g.edge_count();
  const std::size_t n = ctx.points();

  std::vector<std::vector<double>> f(ne), fwd(ne), rev(ne);
  std::vector<double> moments(ne);
  std::vector<EdgeTransfer> transfers(ne);
  double source_scale = 0.0;
  for (std::size_t p = 0; p < ne; ++p) {
    f[p] = times_psi2(ctx, p, source[p]);
    const double h = ctx.step(p);
    moments[p] = simpson(f[p], h);
    std::vector<double> absf(n);
    for (std::size_t i = 0; i < n; ++i)
      absf[i] = std::abs(f[p][i]);
    source_scale += simpson(absf, h);
    fwd[p] = cumulative_simpson(f[p], h);
    if (ctx.head_is_leaf(p))
      rev[p] = reverse_cumulative_simpson(f[p], h);
    if (!ctx.tail_is_leaf(p) && !ctx.head_is_leaf(p)) {
      const auto w = outer_integrand(std::vector<double>(n, 1.0), ctx.psi2()[p]);
      const auto q = outer_integrand(fwd[p], ctx.psi2()[p]);
      transfers[p] = {simpson(w, h), simpson(q, h)};
    }
  }
  const FluxSolution sol = solve_field_constants(g, moments, transfers, source_scale);

  DLField field;
  field.values.resize(ne);
  field.flux.resize(ne);
  field.constants = sol.constants;
  field.tail_values.assign(ne, 0.0);
  std::vector<std::vector<double>> rise(ne);
  for (std::size_t p = 0; p < ne; ++p) {
    const bool tl = ctx.tail_is_leaf(p), hl = ctx.head_is_leaf(p);
    auto &j = field.flux[p];
    j.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (tl && hl)
        j[i] = 2 * i < n ? fwd[p][i] : -rev[p][i];
      else if (hl)
        j[i] = -rev[p][i]; // exiting flux through the leaf is zero
      else if (tl)
        j[i] = fwd[p][i];
      else
        j[i] = sol.constants[p] + fwd[p][i];
    }
    rise[p] = cumulative_simpson(outer_integrand(j, ctx.psi2()[p]), ctx.step(p));
  }
  for (std::size_t p = 0; p < ne; ++p) {
    const Edge &e = g.edge(p);
    double tail = 0.0;
    if (!ctx.tail_is_leaf(p))
      tail = sol.potentials[e.tail];
    else if (!ctx.head_is_leaf(p))
      tail = sol.potentials[e.head] - rise[p].back();
    auto &vals = field.values[p];
    vals.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = tail + rise[p][i];
  }
  apply_gauge(ctx, field);
  return field;
}

struct LoopStep {
  std::size_t edge;
  bool forward;
};

std::vector<LoopStep> loop_traversal(const QuantumGraph &g) {
  if (!g.is_pure_cycle())
    throw DLError("loop construction applied to a graph that is not a pure cycle");
  std::vector<LoopStep> steps;
  std::size_t v = 0;
  std::size_t edge = g.vertex(0).incident[0].edge;
  for (std::size_t s = 0; s < g.edge_count(); ++s) {
    const Edge &e = g.edge(edge);
    const bool forward = e.tail == v;
    steps.push_back({edge, forward});
    const std::size_t w = forward ? e.head : e.tail;
    const auto &inc = g.vertex(w).incident;
    const std::size_t next = inc[0].edge == edge ? inc[1].edge : inc[0].edge;
    v = w;
    edge = next;
  }
  return steps;
}

DLField build_loop(const GroundGrid &ctx, const EdgeSamples &source) {
  const QuantumGraph &g = ctx.graph();
  const std::size_t ne = g.edge_count();
  const std::size_t n = ctx.points();
  const auto steps = loop_traversal(g);

  // running integrals along the traversal coordinate
  std::vector<std::vector<double>> inner(ne), wsum(ne), qsum(ne);
  double inner0 = 0.0, w0 = 0.0, q0 = 0.0;
  for (const auto &st : steps) {
    const std::size_t p = st.edge;
    const double h = ctx.step(p);
    std::vector<double> f = times_psi2(ctx, p, source[p]);
    std::vector<double> psi2 = ctx.psi2()[p];
    if (!st.forward) {
      std::reverse(f.begin(), f.end());
      std::reverse(psi2.begin(), psi2.end());
    }
    inner[p] = cumulative_simpson(f, h);
    for (double &v : inner[p])
      v += inner0;
    wsum[p] = cumulative_simpson(outer_integrand(std::vector<double>(n, 1.0), psi2), h);
    qsum[p] = cumulative_simpson(outer_integrand(inner[p], psi2), h);
    for (double &v : wsum[p])
      v += w0;
    for (double &v : qsum[p])
      v += q0;
    inner0 = inner[p].back();
    w0 = wsum[p].back();
    q0 = qsum[p].back();
  }
  // periodic first constant: the double integral vanishes after one turn
  const double c = -q0 / w0;

  DLField field;
  field.values.resize(ne);
  field.flux.resize(ne);
  field.constants.assign(ne, 0.0);
  field.tail_values.assign(ne, 0.0);
  for (const auto &st : steps) {
    const std::size_t p = st.edge;
    auto vals = qsum[p];
    auto j = inner[p];
    for (std::size_t i = 0; i < n; ++i) {
      vals[i] += c * wsum[p][i];
      j[i] += c;
    }
    if (!st.forward) {
      std::reverse(vals.begin(), vals.end());
      std::reverse(j.begin(), j.end());
      for (double &v : j)
        v = -v; // native orientation flips the derivative
    }
    field.values[p] = std::move(vals);
    field.flux[p] = std::move(j);
    field.constants[p] = field.flux[p].front();
  }
  apply_gauge(ctx, field);
  return field;
}

EdgeSamples g_source(const GroundGrid &ctx, const DLField &f_j, Axis i,
                     double &mean) {
  const auto &bar = ctx.bar(i);
  mean = expectation(ctx, {&bar, &f_j.values});
  EdgeSamples src(bar.size());
  for (std::size_t p = 0; p < bar.size(); ++p) {
    src[p].resize(bar[p].size());
    for (std::size_t k = 0; k < bar[p].size(); ++k)
      src[p][k] = bar[p][k] * f_j.values[p][k] - mean;
  }
  return src;
}

} // namespace

DLField build_F(const GroundGrid &ctx, Axis axis) {
  DLField f = build_general(ctx, ctx.bar(axis));
  f.kind = FieldKind::F;
  f.i = f.j = axis;
  return f;
}

DLField build_G(const GroundGrid &ctx, const DLField &f_j, Axis i) {
  double mean = 0.0;
  const EdgeSamples src = g_source(ctx, f_j, i, mean);
  DLField g = build_general(ctx, src);
  g.kind = FieldKind::G;
  g.i = i;
  g.j = f_j.i;
  g.source_mean = mean;
  return g;
}

DLField build_F_loop(const GroundGrid &ctx, Axis axis) {
  DLField f = build_loop(ctx, ctx.bar(axis));
  f.kind = FieldKind::F;
  f.i = f.j = axis;
  return f;
}

DLField build_G_loop(const GroundGrid &ctx, const DLField &f_j, Axis i) {
  double mean = 0.0;
  const EdgeSamples src = g_source(ctx, f_j, i, mean);
  DLField g = build_loop(ctx, src);
  g.kind = FieldKind::G;
  g.i = i;
  g.j = f_j.i;
  g.source_mean = mean;
  return g;
}

FieldResiduals field_residuals(const GroundGrid &ctx, const DLField &f) {
  const QuantumGraph &g = ctx.graph();
  const std::size_t last = ctx.points() - 1;
  double fscale = 0.0, dscale = 0.0;
  for (const auto &vals : f.values)
    for (double v : vals)
      fscale = std::max(fscale, std::abs(v));
  for (std::size_t p = 0; p < g.edge_count(); ++p) {
    dscale = std::max(dscale, std::abs(f.derivative(ctx, p, 0)));
    dscale = std::max(dscale, std::abs(f.derivative(ctx, p, last)));
  }
  FieldResiduals r;
  for (const auto &v : g.vertices()) {
    if (v.is_leaf())
      continue;
    auto node = [&](const Incidence &inc) {
      return inc.end == EdgeEnd::tail ? std::size_t{0} : last;
    };
    const double v0 = f.values[v.incident[0].edge][node(v.incident[0])];
    double sum = 0.0;
    for (const auto &inc : v.incident) {
      r.continuity = std::max(r.continuity, std::abs(f.values[inc.edge][node(inc)] - v0));
      const double d = f.derivative(ctx, inc.edge, node(inc));
      sum += inc.end == EdgeEnd::tail ? d : -d;
    }
    r.flux = std::max(r.flux, std::abs(sum));
  }
  r.continuity /= fscale > 0.0 ? fscale : 1.0;
  r.flux /= dscale > 0.0 ? dscale : 1.0;
  r.gauge = std::abs(expectation(ctx, {&f.values})) / (fscale > 0.0 ? fscale : 1.0);
  return r;
}

Rank3 beta_dl(const GroundGrid &ctx, const std::array<DLField, 2> &f) {
  Rank3 base;
  for (std::size_t idx = 0; idx < Rank3::size; ++idx) {
    const auto [i, j, k] = Rank3::unflat(idx);
    base[idx] = expectation(ctx, {&f[i].values, &ctx.bar(kAxes[j]), &f[k].values});
  }
  return permutation_sum(base, 0.5);
}

Rank4 gamma_dl(const GroundGrid &ctx, const std::array<DLField, 2> &f,
               const std::array<std::array<DLField, 2>, 2> &g) {
  double ff[2][2], rf[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      ff[a][b] = expectation(ctx, {&f[a].values, &f[b].values});
      rf[a][b] = expectation(ctx, {&ctx.bar(kAxes[a]), &f[b].values});
    }
  Rank4 base;
  for (std::size_t idx = 0; idx < Rank4::size; ++idx) {
    const auto [i, j, k, l] = Rank4::unflat(idx);
    const double frg =
        expectation(ctx, {&f[i].values, &ctx.bar(kAxes[j]), &g[k][l].values});
    base[idx] = -frg + ff[i][j] * rf[k][l];
  }
  return permutation_sum(base, 1.0 / 6.0);
}

DLResult compute_dl_fields(const GroundGrid &ctx, double e10,
                           bool force_general) {
  DLResult out;
  out.e0 = ctx.ground().energy;
  out.e10 = e10;
  out.loop_path = ctx.graph().is_pure_cycle() && !force_general;
  for (Axis a : kAxes)
    out.f[static_cast<int>(a)] = out.loop_path ? build_F_loop(ctx, a) : build_F(ctx, a);
  // G_kl carries rbar^k F_l
  for (Axis k : kAxes)
    for (Axis l : kAxes) {
      const auto &fl = out.f[static_cast<int>(l)];
      out.g[static_cast<int>(k)][static_cast<int>(l)] =
          out.loop_path ? build_G_loop(ctx, fl, k) : build_G(ctx, fl, k);
    }
  out.raw.beta = beta_dl(ctx, out.f);
  out.raw.gamma = gamma_dl(ctx, out.f, out.g);
  out.raw.e10 = e10;
  out.intrinsic = intrinsic_normalize(out.raw.beta, out.raw.gamma, e10);
  auto track = [&](const DLField &f) {
    const auto r = field_residuals(ctx, f);
    out.max_continuity_residual = std::max(out.max_continuity_residual, r.continuity);
    out.max_flux_residual = std::max(out.max_flux_residual, r.flux);
  };
  for (const auto &f : out.f)
    track(f);
  for (const auto &row : out.g)
    for (const auto &f : row)
      track(f);
  return out;
}

DLResult compute_dl(const QuantumGraph &g, const DLOptions &opts) {
  const Spectrum low = find_spectrum(g, 2, opts.spectral);
  const GroundGrid ctx(g, low.modes[0], opts.grid_points);
  return compute_dl_fields(ctx, low.modes[1].energy - low.modes[0].energy,
                           opts.force_general);
}

} // namespace qgnlo
