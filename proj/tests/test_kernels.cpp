#include <doctest.h>

#include <cmath>

#include "ssgp/errors.hpp"
#include "ssgp/kernels.hpp"
#include "ssgp/linalg.hpp"
#include "ssgp/random.hpp"
#include "support.hpp"

using namespace ssgp;

namespace {

arma::mat random_spd(arma::uword n, std::uint64_t seed, double ridge = 0.5) {
  Rng rng(seed);
  arma::mat A = arma::reshape(rng.normal(n * n), n, n);
  return A * A.t() / n + ridge * arma::eye(n, n);
}

arma::mat points(arma::uword n, arma::uword dim, std::uint64_t seed) {
  Rng rng(seed);
  arma::mat X(n, dim);
  for (double& x : X) x = rng.uniform();
  return X;
}

}  // namespace

TEST_CASE("squared exponential correlation") {
  const arma::vec x = {0.1, 0.4}, y = {0.3, 0.0}, beta = {2.0, 0.5};
  CHECK(sq_exp_corr(x, y, beta) == doctest::Approx(std::exp(-(2.0 * 0.04 + 0.5 * 0.16))));
  const arma::mat X = points(6, 2, 1);
  const arma::mat C = corr_matrix(X, beta);
  CHECK(C.is_symmetric());
  CHECK(testing::max_abs(C.diag() - 1.0) == 0.0);
  const arma::mat Z = points(3, 2, 2);
  const arma::mat Cx = cross_corr(X, Z, beta);
  CHECK(Cx(4, 2) == doctest::Approx(sq_exp_corr(X.row(4).t(), Z.row(2).t(), beta)));
  CHECK_THROWS_AS(sq_exp_corr(x, arma::vec{1.0}, beta), ArgumentError);
}

TEST_CASE("correlation from covariance") {
  const arma::mat T = {{4, 1}, {1, 9}};
  const arma::mat h = corr_from_cov(T);
  CHECK(h(0, 0) == 1.0);
  CHECK(h(0, 1) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("network correlation") {
  // path 0-1-2 plus a pendant 1-3; max degree 3
  arma::mat A(4, 4, arma::fill::zeros);
  A(0, 1) = A(1, 0) = A(1, 2) = A(2, 1) = A(1, 3) = A(3, 1) = 1;
  const arma::mat H = network_corr(A);
  CHECK(H(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(H(0, 2) == 0.0);
  CHECK(H(2, 2) == 1.0);
  // diagonally dominant, so positive definite
  CHECK(arma::eig_sym(H).min() > 0.0);
}

TEST_CASE("Kronecker factorization against dense matrices") {
  for (auto [S, p] : {std::pair<arma::uword, arma::uword>{5, 2}, {3, 3}, {7, 1}, {2, 4}}) {
    CAPTURE(S);
    CAPTURE(p);
    const arma::mat H = random_spd(S, 10 + S), T = random_spd(p, 20 + p);
    const KroneckerCorr W(H, T);
    const arma::mat D = arma::kron(H, T);
    CHECK(testing::max_abs(W.dense() - D) < 1e-14);
    double ld, sign;
    arma::log_det(ld, sign, D);
    CHECK(W.log_det() == doctest::Approx(ld).epsilon(1e-12));
    double lh, lt;
    arma::log_det(lh, sign, H);
    arma::log_det(lt, sign, T);
    CHECK(W.log_det() == doctest::Approx(p * lh + S * lt).epsilon(1e-12));
    const arma::mat Dinv = arma::inv(D);
    CHECK(testing::max_abs(W.dense_inverse() - Dinv) < 1e-10 * testing::max_abs(Dinv));
    Rng rng(S * p);
    const arma::vec u = rng.normal(S * p);
    CHECK(testing::max_abs(W.solve(u) - Dinv * u) < 1e-10);
    CHECK(W.quad_form(u) == doctest::Approx(arma::as_scalar(u.t() * Dinv * u)).epsilon(1e-10));
    CHECK(W.quad_form(arma::mat(arma::reshape(u, p, S))) == doctest::Approx(W.quad_form(u)).epsilon(1e-12));
    CHECK_THROWS_AS(W.quad_form(arma::vec(S * p + 1, arma::fill::ones)), ArgumentError);
  }
}

TEST_CASE("kron_corr adds jitter to the spatial factor") {
  const arma::mat X = points(4, 2, 3);
  const arma::vec om = {1.0, 2.0};
  const KroneckerCorr W = kron_corr(X, om, arma::eye(1, 1));
  arma::mat H = corr_matrix(X, om);
  H.diag() += kJitter;
  CHECK(testing::max_abs(W.H() - H) == 0.0);
}

TEST_CASE("predictive process reproduces the kernel at the knots") {
  const arma::mat knots = points(9, 2, 4);
  const arma::vec om = {3.0, 2.0};
  const arma::mat T = {{1.0, 0.4}, {0.4, 2.0}};
  const PredictiveProcess pp(knots, om, T, 0.0);
  for (arma::uword i = 0; i < knots.n_rows; ++i) {
    for (arma::uword j = 0; j < knots.n_rows; ++j) {
      const arma::mat exact = sq_exp_corr(knots.row(i).t(), knots.row(j).t(), om) * T;
      CHECK(testing::max_abs(pp.block(knots.row(i).t(), knots.row(j).t()) - exact) < 1e-12);
    }
    CHECK(pp.delta(knots.row(i).t()) < 1e-12);
  }
}

TEST_CASE("predictive process away from the knots") {
  const arma::mat knots = points(6, 2, 5);
  const arma::vec om = {2.0, 2.0};
  const arma::mat T(1, 1, arma::fill::value(1.5));
  const PredictiveProcess pp(knots, om, T);
  const arma::mat locs = points(10, 2, 6);
  arma::mat Hk = corr_matrix(knots, om);
  Hk.diag() += kJitter;
  const arma::mat Ck = cross_corr(locs, knots, om);
  // low rank part from the textbook formula c(s)' K*^{-1} c(s')
  const arma::mat L = Ck * arma::solve(Hk, Ck.t());
  const arma::mat LR = pp.low_rank_corr(locs);
  // same quantity up to the jitter: w' (H + eps) w vs w' H w
  CHECK(testing::max_abs(LR - L) < 1e-6);
  const arma::vec dl = pp.deltas(locs);
  for (arma::uword i = 0; i < locs.n_rows; ++i) {
    CHECK(dl[i] >= 0.0);
    CHECK(dl[i] == doctest::Approx(1.0 - LR(i, i)).epsilon(1e-12));
    // low rank part plus the diagonal correction restores unit variance
    CHECK(pp.location_corr(locs)(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const arma::mat b = pp.block(locs.row(1).t(), locs.row(1).t());
  CHECK(b(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("grid knots snap to distinct locations") {
  arma::mat locs(36, 2);
  for (arma::uword r = 0; r < 6; ++r)
    for (arma::uword c = 0; c < 6; ++c) locs.row(r * 6 + c) = arma::rowvec{double(c), double(r)};
  const KnotSet k = grid_knots(locs, 4);
  CHECK(k.knots.n_rows == 16);
  for (arma::uword i = 0; i < k.knots.n_rows; ++i) {
    bool found = false;
    for (arma::uword j = 0; j < locs.n_rows; ++j) found = found || arma::all(locs.row(j) == k.knots.row(i));
    CHECK(found);
  }
  // corners are always included
  CHECK(arma::all(k.knots.row(0) == arma::rowvec{0, 0}));
  const KnotSet dup = grid_knots(locs.rows(0, 1), 4);
  CHECK(dup.knots.n_rows == 2);
  Rng rng(1);
  const KnotSet rk = random_knots(locs, 5, rng);
  CHECK(rk.knots.n_rows == 5);
  CHECK(arma::size(arma::unique(rk.knots.col(0) * 10 + rk.knots.col(1))).n_rows == 5);
}

TEST_CASE("cholesky helpers") {
  const arma::mat A = random_spd(40, 7);
  const Cholesky c = factor_spd(A, 0.0, "A");
  CHECK(testing::max_abs(c.lower * c.lower.t() - A) < 1e-12);
  double ld, sign;
  arma::log_det(ld, sign, A);
  CHECK(c.log_det == doctest::Approx(ld).epsilon(1e-12));
  Rng rng(2);
  const arma::vec b = rng.normal(40);
  CHECK(testing::max_abs(c.solve(b) - arma::solve(A, b)) < 1e-10);
  CHECK(c.quad_form(b) == doctest::Approx(arma::as_scalar(b.t() * arma::solve(A, b))).epsilon(1e-10));
  arma::mat sing = arma::ones(3, 3);
  const Cholesky cs = factor_spd(sing, 1e-12, "ones", 8);
  CHECK(cs.jitter > 0.0);
  CHECK_THROWS_AS(cholesky_lower(-arma::eye(2, 2), "neg"), NumericError);
  CHECK_THROWS_AS(factor_spd(-arma::eye(2, 2), 0.0, "neg", 1), NumericError);
  const arma::mat X = arma::reshape(rng.normal(40 * 3), 40, 3);
  CHECK(testing::max_abs(mul_at(X, X) - X.t() * X) < 1e-12);
  CHECK(testing::max_abs(mul_bt(X, X) - X * X.t()) < 1e-12);
}

TEST_CASE("multivariate normal draws") {
  Rng rng(3);
  const arma::mat C = {{2.0, 0.6}, {0.6, 1.0}};
  const arma::vec mu = {1.0, -1.0};
  arma::mat D(2, 40000);
  for (arma::uword i = 0; i < D.n_cols; ++i) D.col(i) = draw_mvn(mu, C, 0.5, rng);
  CHECK(testing::max_abs(arma::mean(D, 1) - mu) < 0.02);
  CHECK(testing::max_abs(arma::cov(D.t()) - 0.5 * C) < 0.03);
  // a rank-deficient covariance is tolerated
  const arma::mat R = {{1.0, 1.0}, {1.0, 1.0}};
  const arma::vec x = draw_mvn(arma::zeros(2), R, 1.0, rng);
  CHECK(x[0] == doctest::Approx(x[1]).epsilon(1e-6));
}
