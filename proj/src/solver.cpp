#include "exprec/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace exprec {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void axpy(cx a, const KtVolume& x, KtVolume& y) {
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] += a * xs[i];
}

double re_inner(const KtVolume& a, const KtVolume& b) { return inner(a.values(), b.values()).real(); }

}  // namespace

double schatten_cost(std::span<const double> singular_values, double p) {
  require(p > 0.0 && p <= 2.0, Errc::invalid_argument, "Schatten exponent must be in (0, 2]");
  double s = 0.0;
  for (double v : singular_values) {
    require(v >= 0.0, Errc::invalid_argument, "singular values must be nonnegative");
    s += std::pow(v, p);
  }
  return s / p;
}

GramSpectrum gram_spectrum(const GramMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram.R);
  require(es.info() == Eigen::Success, Errc::eigen_failure, "eigendecomposition of the Gram matrix failed");
  GramSpectrum s{gram.rows, es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    require(std::isfinite(s.eigenvalues(i)), Errc::non_finite, "non-finite Gram eigenvalue");
  const double top = s.lambda_max();
  if (s.eigenvalues.size() && s.eigenvalues(0) < 0.0) {
    require(s.eigenvalues(0) >= -kPsdTolerance * std::max(top, 0.0), Errc::not_psd,
            "Gram matrix is not positive semidefinite (eigenvalue " + std::to_string(s.eigenvalues(0)) + ")");
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) s.eigenvalues(i) = std::max(s.eigenvalues(i), 0.0);
  }
  return s;
}

WeightSet weights_from_spectrum(const GramSpectrum& spectrum, double p, double eps) {
  require(p > 0.0 && p <= 2.0, Errc::invalid_argument, "Schatten exponent must be in (0, 2]");
  require(eps >= 0.0 && std::isfinite(eps), Errc::invalid_argument, "eps must be finite and >= 0");
  const Eigen::Index n = spectrum.eigenvalues.size();
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = spectrum.eigenvalues(i) + eps;
    require(v > 0.0 || p == 2.0, Errc::invalid_argument, "zero eigenvalue with eps = 0 gives an unbounded weight");
    w(i) = p == 2.0 ? 1.0 : std::pow(v, 0.25 * p - 0.5);
  }
  WeightSet ws;
  ws.rows = spectrum.rows;
  ws.filters = w.asDiagonal() * spectrum.eigenvectors.adjoint();
  ws.eigenvalues = spectrum.eigenvalues;
  ws.eps = eps;
  ws.p = p;
  return ws;
}

WeightSet weight_update(const KtVolume& rho_hat, const FilterSpec& spec, double p, double eps,
                        ShiftRestriction restriction) {
  return weights_from_spectrum(gram_spectrum(assemble_gram(rho_hat, spec, restriction)), p, eps);
}

double smoothed_schatten(const Eigen::VectorXd& eigenvalues, double p, double eps) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) s += std::pow(eigenvalues(i) + eps, 0.5 * p);
  return s / p;
}

CgResult ls_update(const NormalMultipliers& g, const Measurements& meas, double lambda, const KtVolume& x0,
                   const CgOptions& opts) {
  require(lambda > 0.0 && std::isfinite(lambda), Errc::invalid_argument, "lambda must be positive");
  require(opts.max_iters >= 0 && opts.tol >= 0.0, Errc::invalid_argument, "invalid CG options");
  require(x0.grid().same_shape(meas.b.grid), Errc::shape_mismatch, "warm start does not match data");

  auto op = [&](const KtVolume& v) {
    KtVolume out = apply_normal(g, v);
    axpy(lambda, normal(v, meas.coils, meas.mask), out);
    return out;
  };

  KtVolume rhs = adjoint(meas.b, meas.coils, meas.mask);
  for (auto& v : rhs.values()) v *= lambda;
  const double rhs_norm = norm2(rhs.values());

  CgResult res{x0, 0, 0.0};
  if (rhs_norm == 0.0 && sq_norm(x0.values()) == 0.0) return res;
  const double scale = rhs_norm > 0.0 ? rhs_norm : 1.0;

  KtVolume r = rhs;
  axpy(-1.0, op(res.x), r);
  double rs = sq_norm(r.values());
  const double rs0 = rs;
  res.rel_residual = std::sqrt(rs) / scale;
  if (res.rel_residual <= opts.tol) return res;
  KtVolume d = r;
  int growth = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const KtVolume ad = op(d);
    const double curv = re_inner(d, ad);
    require(std::isfinite(curv), Errc::non_finite, "non-finite value in CG");
    if (curv <= 0.0) break;  // d is numerically in the null space; nothing left to gain
    const double alpha = rs / curv;
    axpy(alpha, d, res.x);
    axpy(-alpha, ad, r);
    const double rs_new = sq_norm(r.values());
    res.iterations = it;
    res.rel_residual = std::sqrt(rs_new) / scale;
    // CG residuals are not monotone on ill-conditioned systems; only a sustained
    // rise above the starting residual counts as divergence.
    growth = rs_new > rs ? growth + 1 : 0;
    if (growth >= 10 && rs_new > rs0)
      fail(Errc::cg_divergence, "CG residual grew for 10 consecutive iterations (relative residual " +
                                    std::to_string(res.rel_residual) + ")");
    if (res.rel_residual <= opts.tol) break;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t i = 0; i < d.storage().size(); ++i) d.storage()[i] = r.storage()[i] + beta * d.storage()[i];
  }
  return res;
}

CgResult ls_update(const WeightSet& weights, const FilterSpec& spec, const Measurements& meas, double lambda,
                   const KtVolume& x0, const CgOptions& opts) {
  return ls_update(build_normal_multipliers(weights, spec), meas, lambda, x0, opts);
}

void SolverConfig::validate() const {
  require(p > 0.0 && p <= 2.0, Errc::invalid_argument, "solver p must be in (0, 2]");
  require(lambda > 0.0 && std::isfinite(lambda), Errc::invalid_argument, "solver lambda must be positive");
  require(!eps0 || (*eps0 > 0.0 && std::isfinite(*eps0)), Errc::invalid_argument, "eps0 must be positive");
  require(eps_decay > 0.0 && eps_decay <= 1.0, Errc::invalid_argument, "eps_decay must be in (0, 1]");
  require(!eps_min || (*eps_min >= 0.0 && std::isfinite(*eps_min)), Errc::invalid_argument, "eps_min must be >= 0");
  require(outer_iters >= 1, Errc::invalid_argument, "outer_iters must be >= 1");
  require(cg.max_iters >= 1 && cg.tol >= 0.0, Errc::invalid_argument, "invalid CG settings");
  require(rel_tol >= 0.0, Errc::invalid_argument, "rel_tol must be >= 0");
}

double data_term(const KtVolume& x, const Measurements& meas, double lambda) {
  CoilData ax = forward(x, meas.coils, meas.mask);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.values.size(); ++i) s += std::norm(ax.values[i] - meas.b.values[i]);
  return 0.5 * lambda * s;
}

std::string SolveReport::to_csv() const {
  std::ostringstream os;
  os << "iter,eps,objective_start,objective,data_term,reg_term,cg_iters,cg_residual,seconds\n";
  char buf[512];
  for (const auto& r : iterations) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.6f\n", r.iter, r.eps,
                  r.objective_start, r.objective, r.data_term, r.reg_term, r.cg_iters, r.cg_residual, r.seconds);
    os << buf;
  }
  return os.str();
}

SolveResult irls_solve(const Measurements& meas, const FilterSpec& spec, const SolverConfig& cfg) {
  cfg.validate();
  spec.validate();
  require(spec.grid.same_shape(meas.b.grid), Errc::shape_mismatch, "filter grid does not match data");
  const auto t_start = std::chrono::steady_clock::now();

  SolveResult out{adjoint(meas.b, meas.coils, meas.mask), {}};
  GramSpectrum spec_n = gram_spectrum(assemble_gram(out.rho_hat, spec, cfg.restriction));
  const double lmax = spec_n.lambda_max();
  if (lmax <= 0.0) {
    out.report.converged = true;
    out.report.seconds = seconds_since(t_start);
    return out;
  }
  double eps = cfg.eps0.value_or(lmax / 100.0);
  const double eps_min = cfg.eps_min.value_or(1e-9 * lmax);
  eps = std::max(eps, eps_min);

  double prev = 0.0;
  double data = data_term(out.rho_hat, meas, cfg.lambda);
  for (int n = 1; n <= cfg.outer_iters; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iter = n;
    rec.eps = eps;
    rec.objective_start = smoothed_schatten(spec_n.eigenvalues, cfg.p, eps) + data;

    const WeightSet w = weights_from_spectrum(spec_n, cfg.p, eps);
    const NormalMultipliers g = build_normal_multipliers(w, spec);
    CgResult cg = ls_update(g, meas, cfg.lambda, out.rho_hat, cfg.cg);
    out.rho_hat = std::move(cg.x);

    spec_n = gram_spectrum(assemble_gram(out.rho_hat, spec, cfg.restriction));
    data = data_term(out.rho_hat, meas, cfg.lambda);
    rec.data_term = data;
    rec.reg_term = smoothed_schatten(spec_n.eigenvalues, cfg.p, eps);
    rec.objective = rec.data_term + rec.reg_term;
    rec.cg_iters = cg.iterations;
    rec.cg_residual = cg.rel_residual;
    rec.seconds = seconds_since(t0);
    out.report.iterations.push_back(rec);

    if (!std::isfinite(rec.objective)) {
      std::string trace = out.report.to_csv();
      fail(Errc::non_finite, "objective became non-finite at iteration " + std::to_string(n) + "\n" + trace);
    }
    if (n > 1 && std::abs(rec.objective - prev) <= cfg.rel_tol * std::abs(prev)) {
      out.report.converged = true;
      break;
    }
    prev = rec.objective;
    eps = std::max(eps * cfg.eps_decay, eps_min);
  }
  out.report.seconds = seconds_since(t_start);
  return out;
}

}  // namespace exprec
