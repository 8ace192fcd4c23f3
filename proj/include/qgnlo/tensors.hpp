#pragma once

// Cartesian rank-3 and rank-4 tensors over the plane (indices x = 0, y = 1),
// stored in lexicographic index order xxx, xxy, xyx, ...

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

namespace qgnlo {

template <std::size_t Rank> struct CartesianTensor {
  static constexpr std::size_t size = std::size_t{1} << Rank;
  std::array<double, size> v{};

  static std::size_t flat(const std::array<int, Rank> &idx) {
    std::size_t f = 0;
    for (int i : idx)
      f = 2 * f + static_cast<std::size_t>(i);
    return f;
  }
  static std::array<int, Rank> unflat(std::size_t f) {
    std::array<int, Rank> idx{};
    for (std::size_t r = Rank; r-- > 0;) {
      idx[r] = static_cast<int>(f & 1u);
      f >>= 1;
    }
    return idx;
  }
  static std::string label(std::size_t f) {
    std::string s;
    for (int i : unflat(f))
      s += i == 0 ? 'x' : 'y';
    return s;
  }

  double &operator[](std::size_t f) { return v[f]; }
  double operator[](std::size_t f) const { return v[f]; }
  double &at(const std::array<int, Rank> &idx) { return v[flat(idx)]; }
  double at(const std::array<int, Rank> &idx) const { return v[flat(idx)]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v)
      m = std::max(m, std::abs(x));
    return m;
  }
  CartesianTensor scaled(double f) const {
    CartesianTensor out = *this;
    for (double &x : out.v)
      x *= f;
    return out;
  }
};

using Rank3 = CartesianTensor<3>;
using Rank4 = CartesianTensor<4>;

/// Full permutation sum P over the indices of a base tensor, times `prefactor`.
template <std::size_t Rank>
CartesianTensor<Rank> permutation_sum(const CartesianTensor<Rank> &base,
                                      double prefactor) {
  CartesianTensor<Rank> out;
  for (std::size_t f = 0; f < CartesianTensor<Rank>::size; ++f) {
    // sorted indices make every permutation of a component sum in the same order
    auto idx = CartesianTensor<Rank>::unflat(f);
    std::sort(idx.begin(), idx.end());
    std::array<std::size_t, Rank> perm{};
    for (std::size_t r = 0; r < Rank; ++r)
      perm[r] = r;
    double acc = 0.0;
    do {
      std::array<int, Rank> permuted{};
      for (std::size_t r = 0; r < Rank; ++r)
        permuted[r] = idx[perm[r]];
      acc += base.at(permuted);
    } while (std::next_permutation(perm.begin(), perm.end()));
    out[f] = prefactor * acc;
  }
  return out;
}

/// Rotates a tensor rigidly by angle delta in the plane.
template <std::size_t Rank>
CartesianTensor<Rank> rotate(const CartesianTensor<Rank> &t, double delta) {
  const double r[2][2] = {{std::cos(delta), -std::sin(delta)},
                          {std::sin(delta), std::cos(delta)}};
  CartesianTensor<Rank> out;
  for (std::size_t f = 0; f < CartesianTensor<Rank>::size; ++f) {
    const auto idx = CartesianTensor<Rank>::unflat(f);
    double acc = 0.0;
    for (std::size_t g = 0; g < CartesianTensor<Rank>::size; ++g) {
      const auto jdx = CartesianTensor<Rank>::unflat(g);
      double w = t[g];
      for (std::size_t a = 0; a < Rank; ++a)
        w *= r[idx[a]][jdx[a]];
      acc += w;
    }
    out[f] = acc;
  }
  return out;
}

enum class TensorUnits { raw, intrinsic };

struct PolTensors {
  Rank3 beta;
  Rank4 gamma;
  TensorUnits units = TensorUnits::raw;
  double e10 = 0.0;
};

} // namespace qgnlo
