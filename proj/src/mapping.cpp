#include "exprec/mapping.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "exprec/fft.hpp"

namespace exprec {

T2Map fit_t2(const ImageSeries& series, std::span<const double> te, std::span<const std::uint8_t> support) {
  const Grid& g = series.grid();
  const std::size_t n = g.frame_size();
  require(te.size() == std::size_t(g.T), Errc::shape_mismatch, "echo time count does not match series");
  require(support.size() == n, Errc::shape_mismatch, "support does not match grid");
  require_finite(series, "fit input");

  T2Map m{g.P, g.Q, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
          std::vector<std::uint8_t>(support.begin(), support.end()), 0, 0};
  std::vector<double> mag(std::size_t(g.T));
  for (std::size_t r = 0; r < n; ++r) {
    if (!support[r]) continue;
    bool ok = true;
    for (int t = 0; t < g.T; ++t) {
      mag[std::size_t(t)] = std::abs(series.storage()[std::size_t(t) * n + r]);
      ok = ok && mag[std::size_t(t)] > 0.0;
    }
    if (!ok) {
      m.support[r] = 0;
      ++m.dropped;
      continue;
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int t = 0; t < g.T; ++t) {
      const double w = mag[std::size_t(t)] * mag[std::size_t(t)];
      sw += w;
      sx += w * te[std::size_t(t)];
      sy += w * std::log(mag[std::size_t(t)]);
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (int t = 0; t < g.T; ++t) {
      const double w = mag[std::size_t(t)] * mag[std::size_t(t)];
      const double dx = te[std::size_t(t)] - xm;
      sxx += w * dx * dx;
      sxy += w * dx * (std::log(mag[std::size_t(t)]) - ym);
    }
    const double slope = sxy / sxx;
    const double intercept = ym - slope * xm;
    double t2 = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
    if (!(t2 >= kT2MinMs && t2 <= kT2MaxMs)) {
      t2 = t2 < kT2MinMs ? kT2MinMs : kT2MaxMs;
      ++m.clamped;
    }
    m.t2_ms[r] = t2;
    m.amplitude[r] = std::exp(intercept);
  }
  return m;
}

double snr_db(std::span<const cx> ref, std::span<const cx> rec) {
  require(ref.size() == rec.size(), Errc::shape_mismatch, "metric inputs differ in size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(ref[i]);
    den += std::norm(ref[i] - rec[i]);
  }
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double nrmse(std::span<const cx> ref, std::span<const cx> rec) {
  require(ref.size() == rec.size(), Errc::shape_mismatch, "metric inputs differ in size");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(ref[i] - rec[i]);
    den += std::norm(ref[i]);
  }
  require(den > 0.0, Errc::invalid_argument, "reference has zero norm");
  return std::sqrt(num / den);
}

double t2_mae(const T2Map& fit, std::span<const double> truth, std::span<const std::uint8_t> support) {
  require(truth.size() == fit.t2_ms.size() && support.size() == fit.t2_ms.size(), Errc::shape_mismatch,
          "T2 map sizes differ");
  double s = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (support[i] && fit.support[i]) {
      s += std::abs(fit.t2_ms[i] - truth[i]);
      ++cnt;
    }
  return cnt ? s / double(cnt) : 0.0;
}

KtVolume recon_zerofill(const Measurements& meas) { return adjoint(meas.b, meas.coils, meas.mask); }

namespace {

Eigen::MatrixXcd casorati(const ImageSeries& rho) {
  const Grid& g = rho.grid();
  const auto n = Eigen::Index(g.frame_size());
  Eigen::MatrixXcd c(n, g.T);
  for (int t = 0; t < g.T; ++t) {
    auto f = rho.frame(t);
    for (Eigen::Index r = 0; r < n; ++r) c(r, t) = f[std::size_t(r)];
  }
  return c;
}

}  // namespace

std::vector<double> casorati_singular_values(const ImageSeries& rho) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(casorati(rho));
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

KtLowRankResult recon_ktlowrank(const Measurements& meas, double mu, int iters) {
  require(mu >= 0.0 && std::isfinite(mu), Errc::invalid_argument, "ktlr mu must be >= 0");
  require(iters >= 0, Errc::invalid_argument, "ktlr iterations must be >= 0");
  const Grid& g = meas.b.grid;
  const std::size_t n = g.frame_size();
  KtLowRankResult out{KtVolume(g), {}};
  CoilData ax = forward(out.rho_hat, meas.coils, meas.mask);
  int growth = 0;
  for (int it = 0; it < iters; ++it) {
    CoilData resid = ax;
    for (std::size_t i = 0; i < resid.values.size(); ++i) resid.values[i] -= meas.b.values[i];
    KtVolume step = out.rho_hat;
    const KtVolume grad = adjoint(resid, meas.coils, meas.mask);
    for (std::size_t i = 0; i < step.storage().size(); ++i) step.storage()[i] -= grad.storage()[i];

    // Singular value soft-thresholding of the Casorati matrix.
    const ImageSeries img = dft2_inverse(step);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(casorati(img), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    double nuclear = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      s(j) = std::max(s(j) - mu, 0.0);
      nuclear += s(j);
    }
    const Eigen::MatrixXcd c = svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint();
    ImageSeries next(g);
    for (int t = 0; t < g.T; ++t) {
      auto f = next.frame(t);
      for (std::size_t r = 0; r < n; ++r) f[r] = c(Eigen::Index(r), t);
    }
    out.rho_hat = dft2_forward(next);

    ax = forward(out.rho_hat, meas.coils, meas.mask);
    double d = 0.0;
    for (std::size_t i = 0; i < ax.values.size(); ++i) d += std::norm(ax.values[i] - meas.b.values[i]);
    const double obj = 0.5 * d + mu * nuclear;
    require(std::isfinite(obj), Errc::non_finite, "k-t low rank objective became non-finite");
    growth = !out.objective.empty() && obj > out.objective.back() ? growth + 1 : 0;
    require(growth < 10, Errc::cg_divergence, "k-t low rank objective grew for 10 consecutive iterations");
    out.objective.push_back(obj);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "label,snr_db,nrmse,t2_mae_ms,wall_seconds,config_hash\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.3f,", r.snr_db, r.nrmse, r.t2_mae_ms, r.wall_seconds);
    os << r.label << ',' << buf << r.config_hash << '\n';
  }
  return os.str();
}

}  // namespace exprec
