#pragma once

// Helpers shared by the unit tests: seeded random data and brute-force
// reference computations that deliberately avoid the library's fast paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "exprec/grid.hpp"
#include "exprec/lifting.hpp"
#include "exprec/rng.hpp"

namespace testsupport {

using exprec::cx;

inline cx rand_cx(exprec::CounterRng& rng) { return {rng.normal(), rng.normal()}; }

inline exprec::KtVolume random_volume(const exprec::Grid& g, std::uint64_t seed) {
  exprec::CounterRng rng(seed, 77);
  exprec::KtVolume v(g);
  for (auto& x : v.values()) x = rand_cx(rng);
  return v;
}

inline exprec::FilterKernel random_kernel(int n1, int n2, int nt, std::uint64_t seed) {
  exprec::CounterRng rng(seed, 78);
  exprec::FilterKernel c(n1, n2, nt);
  for (auto& x : c.c) x = rand_cx(rng);
  return c;
}

inline double max_abs_diff(const std::vector<cx>& a, const std::vector<cx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<cx>& a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double rel_fro(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm() / b.norm(); }

/// Direct triple loop: out[m] = sum_l c[l] rho_hat[m - l], spatial indices
/// wrapped when `circular`, otherwise only valid positions are produced.
/// Positions follow the library's ShiftSet for the same choice.
inline std::vector<cx> brute_conv(const exprec::KtVolume& x, const exprec::FilterKernel& c,
                                  const exprec::ShiftSet& rows, bool circular) {
  const auto& g = x.grid();
  std::vector<cx> out(rows.size());
  for (int tau = 0; tau < rows.frames; ++tau)
    for (int u = 0; u < rows.extent1; ++u)
      for (int v = 0; v < rows.extent2; ++v) {
        const int mx = rows.offset1 + u, my = rows.offset2 + v, mt = rows.t0 + tau;
        cx acc = 0.0;
        for (int lt = 0; lt < c.Nt; ++lt)
          for (int l1 = 0; l1 < c.N1; ++l1)
            for (int l2 = 0; l2 < c.N2; ++l2) {
              int sx = mx - l1, sy = my - l2;
              if (circular) {
                sx = exprec::wrap(sx, g.P);
                sy = exprec::wrap(sy, g.Q);
              } else if (sx < 0 || sy < 0) {
                continue;
              }
              acc += c(l1, l2, lt) * x(sx, sy, mt - lt);
            }
        out[rows.index(tau, u, v)] = acc;
      }
  return out;
}

}  // namespace testsupport
