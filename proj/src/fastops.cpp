#include "exprec/fastops.hpp"

#include <cmath>

#include "exprec/fft.hpp"
#include "exprec/parallel.hpp"

namespace exprec {
namespace {

void check_conformal(const KtVolume& rho_hat, const FilterSpec& spec) {
  spec.validate();
  require(rho_hat.grid().same_shape(spec.grid), Errc::shape_mismatch, "volume does not match filter spec grid");
}

std::vector<cx> frame_copy(std::span<const cx> f) { return {f.begin(), f.end()}; }

}  // namespace

ShiftField hybrid_conv(const KtVolume& rho_hat, const FilterSpec& spec, const FilterKernel& c,
                       ShiftRestriction restriction) {
  check_conformal(rho_hat, spec);
  require(c.N1 == spec.N1 && c.N2 == spec.N2 && c.Nt == spec.Nt && c.c.size() == spec.support_size(),
          Errc::shape_mismatch, "filter does not match filter spec");
  const Grid& g = rho_hat.grid();
  const std::size_t n = g.frame_size();

  std::vector<std::vector<cx>> spectra(std::size_t(g.T));
  for (int t = 0; t < g.T; ++t) {
    spectra[t] = frame_copy(rho_hat.frame(t));
    fft::forward(spectra[t], g.P, g.Q);
  }
  std::vector<std::vector<cx>> taps(std::size_t(spec.Nt), std::vector<cx>(n));
  for (int lt = 0; lt < spec.Nt; ++lt) {
    for (int l1 = 0; l1 < spec.N1; ++l1)
      for (int l2 = 0; l2 < spec.N2; ++l2) taps[lt][std::size_t(l1) * g.Q + l2] = c(l1, l2, lt);
    fft::forward(taps[lt], g.P, g.Q);
  }

  ShiftField out{shift_set(spec, restriction), {}};
  const ShiftSet& rows = out.rows;
  out.values.resize(rows.size());
  std::vector<cx> acc(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (int tau = 0; tau < rows.frames; ++tau) {
    std::fill(acc.begin(), acc.end(), cx{});
    const int mt = rows.t0 + tau;
    for (int lt = 0; lt < spec.Nt; ++lt) {
      const auto& a = spectra[mt - lt];
      const auto& b = taps[lt];
      for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
    }
    fft::backward(acc, g.P, g.Q);
    for (int u = 0; u < rows.extent1; ++u)
      for (int v = 0; v < rows.extent2; ++v)
        out.values[rows.index(tau, u, v)] =
            acc[std::size_t(rows.offset1 + u) * g.Q + (rows.offset2 + v)] * scale;
  }
  return out;
}

CrossCorrCache::CrossCorrCache(const KtVolume& rho_hat) : grid_(rho_hat.grid()) {
  images_.resize(std::size_t(grid_.T));
  for (int t = 0; t < grid_.T; ++t) {
    images_[t] = frame_copy(rho_hat.frame(t));
    fft::inverse_unitary(images_[t], grid_.P, grid_.Q);
  }
}

const std::vector<cx>& CrossCorrCache::get(int a, int b) {
  require(a >= 0 && a < grid_.T && b >= 0 && b < grid_.T, Errc::invalid_argument, "frame index out of range");
  auto key = std::make_pair(a, b);
  if (auto it = pairs_.find(key); it != pairs_.end()) return it->second;
  // With unitary images rho = F^H rho_hat: g_ab = unnormalized-DFT(rho_a * conj(rho_b)).
  std::vector<cx> g(grid_.frame_size());
  const auto& ia = images_[a];
  const auto& ib = images_[b];
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = ia[i] * std::conj(ib[i]);
  fft::forward(g, grid_.P, grid_.Q);
  return pairs_.emplace(key, std::move(g)).first->second;
}

std::vector<cx> cross_corr(const KtVolume& rho_hat, int a, int b) {
  CrossCorrCache cache(rho_hat);
  return cache.get(a, b);
}

GramMatrix assemble_gram(const KtVolume& rho_hat, const FilterSpec& spec, ShiftRestriction restriction) {
  check_conformal(rho_hat, spec);
  GramMatrix out;
  out.rows = shift_set(spec, restriction);
  const ShiftSet& rows = out.rows;
  require(rows.size() <= kGramMaxRows, Errc::size_guard,
          "Gram matrix with " + std::to_string(rows.size()) + " rows exceeds the dense limit of " +
              std::to_string(kGramMaxRows));

  const Grid& g = spec.grid;
  const std::size_t n = g.frame_size();
  const auto ns = Eigen::Index(rows.spatial_size());
  out.R.resize(Eigen::Index(rows.size()), Eigen::Index(rows.size()));

  CrossCorrCache cache(rho_hat);
  std::vector<cx> block(n);
  // Differences u - u' and v - v' lie in (-extent, extent); precompute their wrapped offsets.
  std::vector<std::size_t> du(std::size_t(2 * rows.extent1 - 1)), dv(std::size_t(2 * rows.extent2 - 1));
  for (int d = -(rows.extent1 - 1); d < rows.extent1; ++d) du[d + rows.extent1 - 1] = std::size_t(wrap(d, g.P)) * g.Q;
  for (int d = -(rows.extent2 - 1); d < rows.extent2; ++d) dv[d + rows.extent2 - 1] = std::size_t(wrap(d, g.Q));

  for (int tau = 0; tau < rows.frames; ++tau)
    for (int tau2 = tau; tau2 < rows.frames; ++tau2) {
      std::fill(block.begin(), block.end(), cx{});
      for (int j = 0; j < spec.Nt; ++j) {
        const auto& gab = cache.get(tau + j, tau2 + j);
        for (std::size_t i = 0; i < n; ++i) block[i] += gab[i];
      }
      const Eigen::Index r0 = tau * ns, c0 = tau2 * ns;
      for (int u = 0; u < rows.extent1; ++u)
        for (int v = 0; v < rows.extent2; ++v) {
          const Eigen::Index r = r0 + Eigen::Index(u) * rows.extent2 + v;
          for (int u2 = 0; u2 < rows.extent1; ++u2) {
            const std::size_t base = du[u - u2 + rows.extent1 - 1];
            for (int v2 = 0; v2 < rows.extent2; ++v2) {
              const cx val = block[base + dv[v - v2 + rows.extent2 - 1]];
              const Eigen::Index c = c0 + Eigen::Index(u2) * rows.extent2 + v2;
              out.R(r, c) = val;
            }
          }
        }
      if (tau2 != tau) out.R.block(c0, r0, ns, ns) = out.R.block(r0, c0, ns, ns).adjoint();
    }
  // Diagonal blocks are Hermitian up to rounding in the FFT; symmetrize exactly.
  for (int tau = 0; tau < rows.frames; ++tau) {
    auto blk = out.R.block(tau * ns, tau * ns, ns, ns);
    Eigen::MatrixXcd sym = 0.5 * (blk + blk.adjoint());
    blk = sym;
  }
  return out;
}

void NormalMultipliers::finalize() {
  const int T = grid.T;
  const std::size_t n = grid.frame_size();
  pixel_ops.assign(n * T * T, cx{});
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      cx* op = pixel_ops.data() + r * T * T;
      for (int j = 0; j < Nt; ++j)
        for (int tau = 0; tau < k; ++tau)
          for (int tau2 = 0; tau2 < k; ++tau2) op[(tau + j) * T + (tau2 + j)] += field(tau, tau2)[r];
    }
  });
}

NormalMultipliers build_normal_multipliers(const WeightSet& weights, const FilterSpec& spec) {
  spec.validate();
  const ShiftSet& rows = weights.rows;
  require(rows.frames == spec.k() && rows.t0 == spec.Nt - 1 && rows.extent1 <= spec.grid.P &&
              rows.extent2 <= spec.grid.Q,
          Errc::shape_mismatch, "weights do not match filter spec");
  require(weights.filters.cols() == Eigen::Index(rows.size()), Errc::shape_mismatch,
          "weight filters do not match their shift set");

  NormalMultipliers out;
  out.grid = spec.grid;
  out.Nt = spec.Nt;
  out.k = spec.k();
  const Grid& g = spec.grid;
  const std::size_t n = g.frame_size();
  const int k = out.k;
  out.fields.assign(std::size_t(k) * k * n, cx{});

  if (weights.filters.rows() > 0) {
    // sum_i conj(H_i,tau) H_i,tau' only depends on H = filters^* filters; summing
    // H over equal spatial differences and inverse transforming gives the field.
    const Eigen::MatrixXcd H = weights.weight_matrix();
    const auto ns = Eigen::Index(rows.spatial_size());
    parallel_for(std::size_t(k) * k, [&](std::size_t begin, std::size_t end) {
      for (std::size_t pair = begin; pair < end; ++pair) {
        const int tau = int(pair / k), tau2 = int(pair % k);
        cx* field = out.fields.data() + pair * n;
        for (int u = 0; u < rows.extent1; ++u)
          for (int v = 0; v < rows.extent2; ++v) {
            const Eigen::Index r = Eigen::Index(tau) * ns + Eigen::Index(u) * rows.extent2 + v;
            for (int u2 = 0; u2 < rows.extent1; ++u2) {
              const std::size_t base = std::size_t(wrap(u - u2, g.P)) * g.Q;
              for (int v2 = 0; v2 < rows.extent2; ++v2) {
                const Eigen::Index c = Eigen::Index(tau2) * ns + Eigen::Index(u2) * rows.extent2 + v2;
                field[base + std::size_t(wrap(v - v2, g.Q))] += H(r, c);
              }
            }
          }
        fft::backward({field, n}, g.P, g.Q);
      }
    });
  }
  out.finalize();
  return out;
}

ImageSeries apply_normal_image(const NormalMultipliers& g, const ImageSeries& rho) {
  require(rho.grid().same_shape(g.grid), Errc::shape_mismatch, "series does not match normal operator");
  const int T = g.grid.T;
  const std::size_t n = g.grid.frame_size();
  ImageSeries out(rho.grid());
  const cx* in = rho.storage().data();
  cx* dst = out.storage().data();
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const cx* op = g.pixel_ops.data() + r * T * T;
      for (int s = 0; s < T; ++s) {
        cx acc = 0.0;
        for (int s2 = 0; s2 < T; ++s2) acc += op[s * T + s2] * in[std::size_t(s2) * n + r];
        dst[std::size_t(s) * n + r] = acc;
      }
    }
  });
  return out;
}

KtVolume apply_normal(const NormalMultipliers& g, const KtVolume& rho_hat) {
  require(rho_hat.grid().same_shape(g.grid), Errc::shape_mismatch, "volume does not match normal operator");
  const Grid& grid = rho_hat.grid();
  ImageSeries rho(grid, rho_hat.storage());
  for (int t = 0; t < grid.T; ++t) fft::inverse_unitary(rho.frame(t), grid.P, grid.Q);
  ImageSeries y = apply_normal_image(g, rho);
  KtVolume out(grid, std::move(y.storage()));
  for (int t = 0; t < grid.T; ++t) fft::forward_unitary(out.frame(t), grid.P, grid.Q);
  return out;
}

double normal_quadratic(const NormalMultipliers& g, const KtVolume& rho_hat) {
  const KtVolume y = apply_normal(g, rho_hat);
  return inner(rho_hat.values(), y.values()).real();
}

}  // namespace exprec
