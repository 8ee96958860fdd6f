#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "exprec/error.hpp"

namespace exprec {

using cx = std::complex<double>;

/// Sampling grid of an image time series: P x Q pixels, T frames spaced dt_ms apart.
struct Grid {
  int P = 0;
  int Q = 0;
  int T = 0;
  double dt_ms = 1.0;

  void validate() const;

  std::size_t frame_size() const { return static_cast<std::size_t>(P) * static_cast<std::size_t>(Q); }
  std::size_t size() const { return frame_size() * static_cast<std::size_t>(T); }

  bool same_shape(const Grid& o) const { return P == o.P && Q == o.Q && T == o.T; }
};

struct ImageDomain {};
struct KSpaceDomain {};

/// Complex P x Q x T array tagged with its domain. Storage is frame-major
/// ([T][P][Q]) so that each frame is contiguous for the 2-D FFTs; the KTAR
/// file layout ([P,Q,T] row-major) is produced by `to_pqt` / `from_pqt`.
template <class Domain>
class Series {
public:
  Series() = default;

  explicit Series(const Grid& grid) : grid_(grid), data_((grid.validate(), grid.size())) {}

  Series(const Grid& grid, std::vector<cx> data) : grid_(grid), data_(std::move(data)) {
    grid_.validate();
    require(data_.size() == grid_.size(), Errc::shape_mismatch, "series data does not match grid");
  }

  const Grid& grid() const { return grid_; }

  cx& operator()(int x, int y, int t) { return data_[index(x, y, t)]; }
  const cx& operator()(int x, int y, int t) const { return data_[index(x, y, t)]; }

  std::span<cx> frame(int t) { return {data_.data() + t * grid_.frame_size(), grid_.frame_size()}; }
  std::span<const cx> frame(int t) const {
    return {data_.data() + t * grid_.frame_size(), grid_.frame_size()};
  }

  std::span<cx> values() { return data_; }
  std::span<const cx> values() const { return data_; }
  std::vector<cx>& storage() { return data_; }
  const std::vector<cx>& storage() const { return data_; }

  std::size_t index(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * grid_.P + x) * grid_.Q + y;
  }

  /// Values in [P,Q,T] row-major order.
  std::vector<cx> to_pqt() const {
    std::vector<cx> out(data_.size());
    std::size_t i = 0;
    for (int x = 0; x < grid_.P; ++x)
      for (int y = 0; y < grid_.Q; ++y)
        for (int t = 0; t < grid_.T; ++t) out[i++] = (*this)(x, y, t);
    return out;
  }

  static Series from_pqt(const Grid& grid, std::span<const cx> pqt) {
    Series s(grid);
    require(pqt.size() == grid.size(), Errc::shape_mismatch, "[P,Q,T] buffer does not match grid");
    std::size_t i = 0;
    for (int x = 0; x < grid.P; ++x)
      for (int y = 0; y < grid.Q; ++y)
        for (int t = 0; t < grid.T; ++t) s(x, y, t) = pqt[i++];
    return s;
  }

private:
  Grid grid_;
  std::vector<cx> data_;
};

using ImageSeries = Series<ImageDomain>;
using KtVolume = Series<KSpaceDomain>;

/// Unitary per-frame 2-D DFT, zero frequency at index (0,0).
KtVolume dft2_forward(const ImageSeries& x);
ImageSeries dft2_inverse(const KtVolume& k);

/// Throws Errc::non_finite naming the first offending (x,y,t).
template <class Domain>
void require_finite(const Series<Domain>& s, const char* what);

double norm2(std::span<const cx> v);      // Euclidean norm
double sq_norm(std::span<const cx> v);    // squared Euclidean norm
cx inner(std::span<const cx> a, std::span<const cx> b);  // sum conj(a) * b

/// Python-style modulo, result in [0, n).
inline int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace exprec
