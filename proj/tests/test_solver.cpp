#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "exprec/solver.hpp"
#include "support.hpp"

using namespace exprec;
using namespace testsupport;

namespace {

Eigen::MatrixXcd lifted_valid(const KtVolume& x, const FilterSpec& spec) {
  return build_lifted(x, spec, LiftMode::hybrid, ShiftRestriction::valid_linear).entries;
}

// (1/2) sum_i ||h^(i) T(x)||^2 through the explicit lifted matrix.
double dense_reg(const WeightSet& w, const KtVolume& x, const FilterSpec& spec) {
  return 0.5 * (w.filters * lifted_valid(x, spec)).squaredNorm();
}

Measurements make_meas(const KtVolume& truth, double fraction, std::uint64_t seed, int coils = 1) {
  const Grid& g = truth.grid();
  Measurements m;
  m.coils = make_coils(g, coils, seed);
  MaskSpec ms;
  ms.fraction = fraction;
  m.mask = make_mask(g, ms, seed);
  m.b = forward(truth, m.coils, m.mask);
  return m;
}

KtVolume exact_phantom(const Grid& g, double B, std::uint64_t seed) {
  PhantomSpec ps;
  ps.grid = g;
  ps.kind = PhantomKind::bandlimited_exact;
  ps.bandwidth = B;
  return dft2_forward(make_phantom(ps, seed).series);
}

double rel_err(const KtVolume& a, const KtVolume& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.storage().size(); ++i) num += std::norm(a.storage()[i] - b.storage()[i]);
  return std::sqrt(num) / norm2(b.values());
}

}  // namespace

TEST_CASE("schatten cost closed forms") {
  const std::vector<double> s{3.0, 4.0};
  CHECK(schatten_cost(s, 1.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(schatten_cost(s, 2.0) == doctest::Approx(12.5).epsilon(1e-15));
  CHECK(schatten_cost(s, 0.5) == doctest::Approx(2.0 * (std::sqrt(3.0) + 2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(schatten_cost(std::vector<double>{-1.0}, 1.0), Error);
}

TEST_CASE("weights for scalar Gram matrices") {
  GramSpectrum s;
  s.eigenvalues = Eigen::Vector2d(4.0, 4.0);
  s.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
  const WeightSet w = weights_from_spectrum(s, 1.0, 0.0);
  CHECK((w.filters - Eigen::MatrixXcd::Identity(2, 2) / std::sqrt(2.0)).norm() < 1e-15);
  CHECK((w.weight_matrix() - 0.5 * Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-15);
  s.eigenvalues = Eigen::Vector2d(1.0, 1.0);
  for (double p : {0.3, 1.0, 1.7}) CHECK((weights_from_spectrum(s, p, 0.0).weight_matrix() - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("weight filters reproduce the matrix power") {
  const Grid g{6, 6, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  const double p = 0.6, eps = 0.1;
  const KtVolume x = random_volume(g, 11);
  const WeightSet w = weight_update(x, spec, p, eps);
  const Eigen::MatrixXcd T = lifted_valid(x, spec);
  const Eigen::MatrixXcd R = T * T.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  const Eigen::VectorXd d = (es.eigenvalues().array() + eps).pow(0.5 * p - 1.0);
  const Eigen::MatrixXcd H = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  CHECK((w.weight_matrix() - H).norm() <= 1e-8 * H.norm());
  CHECK(w.filters.rows() == Eigen::Index(shift_set(spec, ShiftRestriction::valid_linear).size()));
}

TEST_CASE("schatten cost from Gram eigenvalues matches the SVD route") {
  const Grid g{6, 5, 4, 1.0};
  const FilterSpec spec{3, 2, 2, g};
  for (double p : {0.5, 1.0, 1.5}) {
    const KtVolume x = random_volume(g, 12);
    const GramSpectrum s = gram_spectrum(assemble_gram(x, spec));
    Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(lifted_valid(x, spec)).singularValues();
    const std::vector<double> svv(sv.data(), sv.data() + sv.size());
    double via_eig = 0.0;
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) via_eig += std::pow(std::max(s.eigenvalues(i), 0.0), 0.5 * p);
    via_eig /= p;
    CHECK(via_eig == doctest::Approx(schatten_cost(svv, p)).epsilon(1e-8));
  }
}

TEST_CASE("majorization and eigen identities") {
  const Grid g{6, 6, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const double p = 0.5 + 0.2 * double(seed), eps = 0.05;
    const KtVolume prev = random_volume(g, 20 + seed);
    const KtVolume x = random_volume(g, 40 + seed);
    const WeightSet w = weight_update(prev, spec, p, eps);
    const NormalMultipliers gm = build_normal_multipliers(w, spec);

    // Tr(T^* H T) against sum_i ||h^(i) T||^2 and the collapsed operator.
    const Eigen::MatrixXcd T = lifted_valid(x, spec);
    const double trace = (T.adjoint() * w.weight_matrix() * T).trace().real();
    const double sum_rows = 2.0 * dense_reg(w, x, spec);
    CHECK(sum_rows == doctest::Approx(trace).epsilon(1e-8));
    CHECK(normal_quadratic(gm, x) == doctest::Approx(trace).epsilon(1e-8));

    // At the expansion point the quadratic equals sum_j lambda_j (lambda_j + eps)^{p/2-1}.
    double ident = 0.0;
    for (Eigen::Index j = 0; j < w.eigenvalues.size(); ++j)
      ident += w.eigenvalues(j) * std::pow(w.eigenvalues(j) + eps, 0.5 * p - 1.0);
    CHECK(normal_quadratic(gm, prev) == doctest::Approx(ident).epsilon(1e-8));
  }
}

TEST_CASE("normal operator gradient matches finite differences") {
  const Grid g{6, 6, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  const WeightSet w = weight_update(random_volume(g, 5), spec, 0.7, 0.2);
  const NormalMultipliers gm = build_normal_multipliers(w, spec);
  const KtVolume x = random_volume(g, 6);
  const KtVolume grad = apply_normal(gm, x);
  CounterRng rng(7, 0);
  const double h = 1e-3;
  for (int k = 0; k < 20; ++k) {
    const std::size_t j = std::size_t(rng.uniform() * double(x.storage().size()));
    for (cx dir : {cx(1.0, 0.0), cx(0.0, 1.0)}) {
      KtVolume xp = x, xm = x;
      xp.storage()[j] += h * dir;
      xm.storage()[j] -= h * dir;
      const double fd = (dense_reg(w, xp, spec) - dense_reg(w, xm, spec)) / (2.0 * h);
      const double an = (std::conj(dir) * grad.storage()[j]).real();
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("CG agrees with a dense normal-equation solve") {
  const Grid g{8, 8, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  const double lambda = 2.0;
  const KtVolume truth = random_volume(g, 30);
  const Measurements m = make_meas(truth, 0.5, 31);
  const WeightSet w = weight_update(random_volume(g, 32), spec, 0.8, 0.5);

  // Stack the maps x -> h^(i) T(x) column by column from unit inputs.
  const Eigen::Index n = Eigen::Index(g.size());
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
  {
    std::vector<Eigen::VectorXcd> images(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      KtVolume e(g);
      e.storage()[std::size_t(j)] = 1.0;
      const Eigen::MatrixXcd y = w.filters * lifted_valid(e, spec);
      images[std::size_t(j)] = Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size());
    }
    Eigen::MatrixXcd A(images[0].size(), n);
    for (Eigen::Index j = 0; j < n; ++j) A.col(j) = images[std::size_t(j)];
    G = A.adjoint() * A;
  }
  Eigen::VectorXcd rhs(n);
  const KtVolume atb = adjoint(m.b, m.coils, m.mask);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (m.mask.bits[std::size_t(j)]) G(j, j) += lambda;
    rhs(j) = lambda * atb.storage()[std::size_t(j)];
  }
  const Eigen::VectorXcd xd = G.ldlt().solve(rhs);

  const CgResult cg = ls_update(w, spec, m, lambda, KtVolume(g), CgOptions{1000, 1e-13});
  const Eigen::Map<const Eigen::VectorXcd> xc(cg.x.storage().data(), n);
  CHECK((xc - xd).norm() <= 1e-8 * xd.norm());
}

TEST_CASE("least squares without regularizer") {
  const Grid g{6, 5, 3, 1.0};
  const FilterSpec spec{2, 2, 2, g};
  WeightSet empty;
  empty.rows = shift_set(spec, ShiftRestriction::valid_linear);
  empty.filters = Eigen::MatrixXcd::Zero(0, Eigen::Index(empty.rows.size()));
  const KtVolume truth = random_volume(g, 8);

  const Measurements full = make_meas(truth, 1.0, 1);
  const CgResult a = ls_update(empty, spec, full, 1.0, KtVolume(g), CgOptions{});
  CHECK(max_abs_diff(a.x.storage(), truth.storage()) < 1e-12);

  const Measurements half = make_meas(truth, 0.5, 2);
  const CgResult b = ls_update(empty, spec, half, 1.0, KtVolume(g), CgOptions{});
  for (std::size_t i = 0; i < truth.storage().size(); ++i)
    CHECK(std::abs(b.x.storage()[i] - (half.mask.bits[i] ? truth.storage()[i] : cx(0.0))) < 1e-12);
}

TEST_CASE("LS step does not increase the weighted objective") {
  const Grid g{8, 8, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  const KtVolume truth = exact_phantom(g, 1.0, 3);
  const Measurements m = make_meas(truth, 0.4, 4);
  const KtVolume x0 = adjoint(m.b, m.coils, m.mask);
  const WeightSet w = weight_update(x0, spec, 0.6, 1e-2);
  const double lambda = 10.0;
  const CgResult r = ls_update(w, spec, m, lambda, x0, CgOptions{});
  const double f0 = dense_reg(w, x0, spec) + data_term(x0, m, lambda);
  const double f1 = dense_reg(w, r.x, spec) + data_term(r.x, m, lambda);
  CHECK(f1 <= f0 + 1e-10);
}

TEST_CASE("smoothed objective is non-increasing at fixed eps") {
  const Grid g{8, 8, 5, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const KtVolume truth = exact_phantom(g, 1.0, 100 + seed);
    Measurements m = make_meas(truth, 0.5, 200 + seed, 1 + int(seed % 2));
    m.b = add_noise(m.b, m.mask, 1e-3 * mean_sampled_magnitude(m.b, m.mask), seed);
    SolverConfig cfg;
    cfg.p = 0.5 + 0.05 * double(seed);
    cfg.lambda = 100.0;
    cfg.eps0 = 1e-2 * gram_spectrum(assemble_gram(adjoint(m.b, m.coils, m.mask), spec)).lambda_max();
    cfg.eps_decay = 1.0;
    cfg.outer_iters = 8;
    cfg.rel_tol = 0.0;
    cfg.cg = CgOptions{500, 1e-12};
    const SolveReport rep = irls_solve(m, spec, cfg).report;
    REQUIRE(rep.iterations.size() == 8);
    for (std::size_t n = 0; n < rep.iterations.size(); ++n) {
      const auto& it = rep.iterations[n];
      CHECK(it.objective <= it.objective_start * (1.0 + 1e-6));
      if (n > 0) CHECK(it.objective <= rep.iterations[n - 1].objective * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("dominant data term reproduces fully sampled data") {
  const Grid g{8, 8, 4, 1.0};
  const FilterSpec spec{3, 3, 2, g};
  const KtVolume truth = exact_phantom(g, 1.0, 9);
  const Measurements m = make_meas(truth, 1.0, 9);
  SolverConfig cfg;
  cfg.lambda = 1e6;
  cfg.outer_iters = 1;
  const SolveResult r = irls_solve(m, spec, cfg);
  CHECK(rel_err(r.rho_hat, truth) <= 1e-4);
  CHECK(r.report.iterations.size() == 1);
}

TEST_CASE("noiseless exact phantom is recovered from half the samples") {
  // At 16 x 16 x 6 with a 50% mask, 15 outer iterations reach about 1e-2 and
  // 30 reach a few 1e-3; see the project notes.
  const Grid g{16, 16, 6, 1.0};
  const FilterSpec spec{11, 11, 2, g};
  const KtVolume truth = exact_phantom(g, 2.0, 1);
  const Measurements m = make_meas(truth, 0.5, 2);
  SolverConfig cfg;
  cfg.p = 0.7;
  cfg.lambda = 1e4;
  cfg.eps_decay = 0.5;
  cfg.outer_iters = 30;
  cfg.rel_tol = 0.0;
  const SolveResult r = irls_solve(m, spec, cfg);
  const double err = rel_err(r.rho_hat, truth);
  MESSAGE("relative recovery error after 30 iterations: " << err);
  CHECK(err <= 5e-3);
  CHECK(rel_err(adjoint(m.b, m.coils, m.mask), truth) > 0.3);
}

TEST_CASE("solver configuration and PSD checks") {
  SolverConfig c;
  c.p = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.eps_decay = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  GramMatrix gm;
  gm.R = Eigen::MatrixXcd::Identity(2, 2);
  gm.R(1, 1) = -0.5;
  try {
    gram_spectrum(gm);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_psd);
  }
  gm.R(1, 1) = -1e-12;
  CHECK(gram_spectrum(gm).eigenvalues(0) == 0.0);
}

TEST_CASE("report csv") {
  SolveReport r;
  r.iterations.push_back(IterationRecord{1, 0.5, 3.0, 2.0, 1.5, 0.5, 12, 1e-9, 0.25});
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("iter,eps,objective_start,objective,data_term,reg_term,cg_iters,cg_residual,seconds\n", 0) == 0);
  CHECK(csv.find("\n1,0.5,3,2,1.5,0.5,12,") != std::string::npos);
}
