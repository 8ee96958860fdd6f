#include "exprec/lifting.hpp"

#include <sstream>

namespace exprec {

void FilterSpec::validate() const {
  grid.validate();
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(Errc::invalid_argument, std::string("filter spec violates ") + what);
  };
  check(Nt >= 1, "1 <= Nt");
  check(Nt <= grid.T, "Nt <= T");
  check(N1 >= 1, "1 <= N1");
  check(N1 <= grid.P, "N1 <= P");
  check(N2 >= 1, "1 <= N2");
  check(N2 <= grid.Q, "N2 <= Q");
}

ShiftSet shift_set(const FilterSpec& spec, ShiftRestriction restriction) {
  spec.validate();
  ShiftSet s;
  s.t0 = spec.Nt - 1;
  s.frames = spec.k();
  if (restriction == ShiftRestriction::full_circular) {
    s.extent1 = spec.grid.P;
    s.extent2 = spec.grid.Q;
  } else {
    s.offset1 = spec.N1 - 1;
    s.offset2 = spec.N2 - 1;
    s.extent1 = spec.M1();
    s.extent2 = spec.M2();
  }
  return s;
}

LagSet lag_set(const FilterSpec& spec, LiftMode mode) {
  spec.validate();
  if (mode == LiftMode::linear) return {spec.N1, spec.N2, spec.Nt};
  return {spec.grid.P, spec.grid.Q, spec.Nt};
}

LiftedMatrix build_lifted(const KtVolume& rho_hat, const FilterSpec& spec, LiftMode mode) {
  return build_lifted(rho_hat, spec, mode,
                      mode == LiftMode::linear ? ShiftRestriction::valid_linear
                                               : ShiftRestriction::full_circular);
}

LiftedMatrix build_lifted(const KtVolume& rho_hat, const FilterSpec& spec, LiftMode mode,
                          ShiftRestriction restriction) {
  spec.validate();
  require(rho_hat.grid().same_shape(spec.grid), Errc::shape_mismatch, "volume does not match filter spec grid");
  require(!(mode == LiftMode::linear && restriction == ShiftRestriction::full_circular),
          Errc::invalid_argument, "linear mode has no circular shifts");
  LiftedMatrix m;
  m.mode = mode;
  m.grid = spec.grid;
  m.rows = shift_set(spec, restriction);
  m.cols = lag_set(spec, mode);
  require(m.rows.size() * m.cols.size() <= kOracleMaxEntries, Errc::size_guard,
          "explicit lifted matrix too large; use the fastops kernels instead");
  m.entries.resize(Eigen::Index(m.rows.size()), Eigen::Index(m.cols.size()));

  const Grid& g = spec.grid;
  const ShiftSet& r = m.rows;
  for (int tau = 0; tau < r.frames; ++tau)
    for (int u = 0; u < r.extent1; ++u)
      for (int v = 0; v < r.extent2; ++v) {
        const auto row = Eigen::Index(r.index(tau, u, v));
        const int mx = r.offset1 + u, my = r.offset2 + v, mt = r.t0 + tau;
        for (int lt = 0; lt < m.cols.Nt; ++lt)
          for (int l1 = 0; l1 < m.cols.extent1; ++l1)
            for (int l2 = 0; l2 < m.cols.extent2; ++l2) {
              // Linear-mode rows are valid by construction, so wrap() is the identity there.
              const int x = wrap(mx - l1, g.P), y = wrap(my - l2, g.Q);
              m.entries(row, Eigen::Index(m.cols.index(lt, l1, l2))) = rho_hat(x, y, mt - lt);
            }
      }
  return m;
}

Eigen::VectorXcd LiftedMatrix::embed(const FilterKernel& c) const {
  require(c.Nt == cols.Nt && c.N1 <= cols.extent1 && c.N2 <= cols.extent2 &&
              c.c.size() == std::size_t(c.N1) * c.N2 * c.Nt,
          Errc::shape_mismatch, "filter does not fit the lag set");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index(cols.size()));
  for (int lt = 0; lt < c.Nt; ++lt)
    for (int l1 = 0; l1 < c.N1; ++l1)
      for (int l2 = 0; l2 < c.N2; ++l2) v(Eigen::Index(cols.index(lt, l1, l2))) = c(l1, l2, lt);
  return v;
}

ShiftField LiftedMatrix::apply(const FilterKernel& c) const {
  Eigen::VectorXcd out = entries * embed(c);
  return {rows, std::vector<cx>(out.data(), out.data() + out.size())};
}

KtVolume apply_lifted_adjoint(const Grid& grid, const ShiftSet& rows, const LagSet& cols,
                              const Eigen::MatrixXcd& y) {
  require(y.rows() == Eigen::Index(rows.size()) && y.cols() == Eigen::Index(cols.size()),
          Errc::shape_mismatch, "adjoint input does not match lifted matrix shape");
  KtVolume out(grid);
  for (int tau = 0; tau < rows.frames; ++tau)
    for (int u = 0; u < rows.extent1; ++u)
      for (int v = 0; v < rows.extent2; ++v) {
        const auto row = Eigen::Index(rows.index(tau, u, v));
        const int mx = rows.offset1 + u, my = rows.offset2 + v, mt = rows.t0 + tau;
        for (int lt = 0; lt < cols.Nt; ++lt)
          for (int l1 = 0; l1 < cols.extent1; ++l1)
            for (int l2 = 0; l2 < cols.extent2; ++l2)
              out(wrap(mx - l1, grid.P), wrap(my - l2, grid.Q), mt - lt) +=
                  y(row, Eigen::Index(cols.index(lt, l1, l2)));
      }
  return out;
}

KtVolume apply_lifted_adjoint(const LiftedMatrix& layout, const Eigen::MatrixXcd& y) {
  return apply_lifted_adjoint(layout.grid, layout.rows, layout.cols, y);
}

AnnihilationCertificate annihilation_certificate(const KtVolume& rho_hat, const FilterSpec& spec,
                                                 LiftMode mode, double tol) {
  require(tol > 0.0, Errc::invalid_argument, "tolerance must be positive");
  const ShiftSet rows = shift_set(spec, mode == LiftMode::linear ? ShiftRestriction::valid_linear
                                                                 : ShiftRestriction::full_circular);
  const LagSet cols = lag_set(spec, mode);
  if (rows.size() * cols.size() > kOracleMaxEntries) {
    std::ostringstream os;
    os << "lifted matrix " << rows.size() << "x" << cols.size()
       << " exceeds the dense oracle limit; use fastops::assemble_gram diagnostics instead";
    fail(Errc::size_guard, os.str());
  }
  const LiftedMatrix m = build_lifted(rho_hat, spec, mode);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m.entries);
  const Eigen::VectorXd s = svd.singularValues();

  AnnihilationCertificate cert;
  cert.singular_values.assign(s.data(), s.data() + s.size());
  cert.sigma_max = s.size() ? s(0) : 0.0;
  const auto n = std::size_t(m.entries.cols());
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= tol * cert.sigma_max && cert.sigma_max > 0.0) ++rank;
  cert.nullity_est = n - rank;
  // Wide matrices have n - min(M, N) implicit zero singular values.
  cert.sigma_min = std::size_t(s.size()) < n ? 0.0 : (s.size() ? s(s.size() - 1) : 0.0);
  return cert;
}

}  // namespace exprec
