#include "qgnlo/dl.hpp"
#include "qgnlo/runner.hpp"
#include "qgnlo/sos.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

using namespace qgnlo;

namespace {

constexpr double pi = std::numbers::pi;

DLOptions coarse() {
  DLOptions o;
  o.grid_points = 1001;
  return o;
}

template <std::size_t R>
double rel_diff(const CartesianTensor<R> &a, const CartesianTensor<R> &b) {
  double d = 0.0, s = 1e-300;
  for (std::size_t f = 0; f < CartesianTensor<R>::size; ++f) {
    d = std::max(d, std::abs(a[f] - b[f]));
    s = std::max(s, std::abs(a[f]));
  }
  return d / s;
}

template <std::size_t R>
CartesianTensor<R> mirror(const CartesianTensor<R> &t) {
  CartesianTensor<R> out;
  for (std::size_t f = 0; f < CartesianTensor<R>::size; ++f) {
    const auto idx = CartesianTensor<R>::unflat(f);
    const auto ny = std::count(idx.begin(), idx.end(), 1);
    out[f] = ny % 2 == 0 ? t[f] : -t[f];
  }
  return out;
}

std::vector<QuantumGraph> sample_graphs(std::uint64_t seed, int count) {
  oracle::SplitMix rng(seed);
  std::vector<QuantumGraph> out;
  for (int i = 0; i < count; ++i)
    out.push_back(i % 2 == 0 ? oracle::random_star(rng) : oracle::random_wire(rng));
  return out;
}

} // namespace

TEST_CASE("DL tensors rotate covariantly") {
  oracle::SplitMix rng(11);
  for (const auto &g : sample_graphs(101, 6)) {
    const double delta = rng.uniform(0.0, 2 * pi);
    const auto a = compute_dl(g, coarse());
    const auto b = compute_dl(g.rotated(delta), coarse());
    CHECK(rel_diff(rotate(a.raw.beta, delta), b.raw.beta) < 1e-8);
    CHECK(rel_diff(rotate(a.raw.gamma, delta), b.raw.gamma) < 1e-8);
  }
}

TEST_CASE("mirror image flips components with an odd number of y indices") {
  for (const auto &g : sample_graphs(202, 6)) {
    const auto a = compute_dl(g, coarse());
    const auto b = compute_dl(g.reflected(), coarse());
    CHECK(rel_diff(mirror(a.raw.beta), b.raw.beta) < 1e-9);
    CHECK(rel_diff(mirror(a.raw.gamma), b.raw.gamma) < 1e-9);
  }
}

TEST_CASE("intrinsic tensors are scale invariant") {
  oracle::SplitMix rng(33);
  for (const auto &g : sample_graphs(303, 6)) {
    const double lambda = rng.uniform(0.3, 4.0);
    const auto a = compute_dl(g, coarse());
    const auto b = compute_dl(g.scaled(lambda), coarse());
    CHECK(rel_diff(a.intrinsic.beta, b.intrinsic.beta) < 1e-8);
    CHECK(rel_diff(a.intrinsic.gamma, b.intrinsic.gamma) < 1e-8);
  }
}

TEST_CASE("intrinsic tensors stay inside the fundamental limits") {
  for (const auto &g : sample_graphs(404, 30)) {
    const auto r = compute_dl(g, coarse());
    CHECK(r.intrinsic.beta.max_abs() <= 1.0);
    CHECK(r.intrinsic.gamma.at({0, 0, 0, 0}) >= -0.25);
    CHECK(r.intrinsic.gamma.at({1, 1, 1, 1}) >= -0.25);
    CHECK_FALSE(violates_bounds(r.intrinsic));
  }
}

TEST_CASE("DL and converged SOS agree on random graphs") {
  for (const auto &g : sample_graphs(505, 4)) {
    const auto dl = compute_dl(g);
    const auto sos = compute_sos(g, 40);
    const double scale = std::max(dl.intrinsic.beta.max_abs(), 1e-3);
    for (std::size_t f = 0; f < Rank3::size; ++f)
      CHECK(std::abs(dl.intrinsic.beta[f] - sos.intrinsic.beta[f]) <= 1e-3 * scale);
    CHECK(rel_diff(dl.intrinsic.gamma, sos.intrinsic.gamma) <= 1e-3);
  }
}

TEST_CASE("repeated evaluation is bitwise identical") {
  for (const auto &g : sample_graphs(606, 3)) {
    const auto a = compute_dl(g, coarse());
    const auto b = compute_dl(g, coarse());
    CHECK(std::memcmp(a.raw.beta.v.data(), b.raw.beta.v.data(), sizeof(a.raw.beta.v)) == 0);
    CHECK(std::memcmp(a.raw.gamma.v.data(), b.raw.gamma.v.data(), sizeof(a.raw.gamma.v)) == 0);
    const auto s1 = compute_sos(g, 15);
    const auto s2 = compute_sos(g, 15);
    CHECK(std::memcmp(s1.raw.gamma.v.data(), s2.raw.gamma.v.data(), sizeof(s1.raw.gamma.v)) == 0);
  }
}
