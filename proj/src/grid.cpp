#include "exprec/grid.hpp"

#include <cmath>
#include <sstream>

#include "exprec/fft.hpp"

namespace exprec {

void Grid::validate() const {
  if (P < 1 || Q < 1 || T < 2 || !(dt_ms > 0.0) || !std::isfinite(dt_ms)) {
    std::ostringstream os;
    os << "invalid grid P=" << P << " Q=" << Q << " T=" << T << " dt=" << dt_ms
       << " (need P>=1, Q>=1, T>=2, dt>0)";
    fail(Errc::invalid_argument, os.str());
  }
}

template <class Domain>
void require_finite(const Series<Domain>& s, const char* what) {
  const Grid& g = s.grid();
  for (int t = 0; t < g.T; ++t)
    for (int x = 0; x < g.P; ++x)
      for (int y = 0; y < g.Q; ++y) {
        const cx v = s(x, y, t);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
          std::ostringstream os;
          os << what << ": non-finite value at (x=" << x << ", y=" << y << ", t=" << t << ")";
          fail(Errc::non_finite, os.str());
        }
      }
}

template void require_finite(const Series<ImageDomain>&, const char*);
template void require_finite(const Series<KSpaceDomain>&, const char*);

KtVolume dft2_forward(const ImageSeries& x) {
  require_finite(x, "dft2_forward");
  KtVolume out(x.grid(), x.storage());
  const Grid& g = x.grid();
  for (int t = 0; t < g.T; ++t) fft::forward_unitary(out.frame(t), g.P, g.Q);
  return out;
}

ImageSeries dft2_inverse(const KtVolume& k) {
  require_finite(k, "dft2_inverse");
  ImageSeries out(k.grid(), k.storage());
  const Grid& g = k.grid();
  for (int t = 0; t < g.T; ++t) fft::inverse_unitary(out.frame(t), g.P, g.Q);
  return out;
}

double norm2(std::span<const cx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double sq_norm(std::span<const cx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

cx inner(std::span<const cx> a, std::span<const cx> b) {
  require(a.size() == b.size(), Errc::shape_mismatch, "inner product size mismatch");
  cx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace exprec
