#include <doctest.h>

#include <cmath>

#include "ssgp/design.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/scoring.hpp"
#include "support.hpp"

using namespace ssgp;

TEST_CASE("latin hypercube has one point per stratum in every column") {
  const arma::uword N = 25, d = 4;
  const DesignSet D = latin_hypercube(N, d, 123);
  CHECK(D.U.n_rows == N);
  CHECK(D.U.n_cols == d);
  for (arma::uword c = 0; c < d; ++c) {
    arma::uvec bins = arma::conv_to<arma::uvec>::from(arma::floor(D.U.col(c) * N));
    bins = arma::sort(bins);
    CHECK(arma::all(bins == arma::regspace<arma::uvec>(0, N - 1)));
    CHECK(D.U.col(c).min() > 0.0);
    CHECK(D.U.col(c).max() < 1.0);
  }
  CHECK(testing::max_abs(D.U - latin_hypercube(N, d, 123).U) == 0.0);
  CHECK(testing::max_abs(D.U - latin_hypercube(N, d, 124).U) > 0.0);
}

TEST_CASE("midpoint latin hypercube sits at stratum centres") {
  const DesignSet D = latin_hypercube(10, 2, 5, true);
  const arma::mat frac = D.U * 10.0 - arma::floor(D.U * 10.0);
  CHECK(testing::max_abs(frac - 0.5) < 1e-12);
}

TEST_CASE("raw and unit scales round-trip") {
  const arma::vec lo = {0.5, 0.02}, hi = {1.5, 0.08};
  const arma::vec raw = {0.95, 0.045};
  const arma::vec u = to_unit(raw, lo, hi);
  CHECK(u[0] == doctest::Approx(0.45));
  CHECK(testing::max_abs(to_raw(u, lo, hi) - raw) < 1e-15);
  DesignSet D = latin_hypercube(4, 2, 1);
  D.lo = lo;
  D.hi = hi;
  const arma::mat R = D.raw();
  CHECK(R(2, 1) == doctest::Approx(lo[1] + D.U(2, 1) * (hi[1] - lo[1])));
  CHECK_THROWS_AS(to_unit(raw, hi, lo), ArgumentError);
}

TEST_CASE("GRS unit values") {
  const arma::mat mu = {{1.0, 2.0}, {3.0, -1.0}};
  CHECK(grs(mu, mu, arma::ones(2, 2)) == 0.0);
  CHECK(grs(testing::scalar_mat(3.0), testing::scalar_mat(1.0), testing::scalar_mat(1.0)) == -4.0);
  const arma::mat sig = {{2.0, 0.5}, {1.0, 4.0}};
  const arma::mat z = {{0.0, 2.5}, {1.0, 0.0}};
  double expect = 0.0;
  for (arma::uword i = 0; i < 4; ++i) {
    const double e = (z[i] - mu[i]) / sig[i];
    expect -= e * e + 2.0 * std::log(sig[i]);
  }
  CHECK(grs(z, mu, sig) == doctest::Approx(expect).epsilon(1e-15));
  CHECK_THROWS_AS(grs(z, mu, arma::zeros(2, 2)), ArgumentError);
  CHECK_THROWS_AS(grs(z, arma::ones(3, 2), sig), ArgumentError);
}

TEST_CASE("GRS is maximised by the true spread") {
  // for z - mu = e, -e^2/s^2 - 2 log s peaks at s = |e|
  const arma::mat z = testing::scalar_mat(2.0), mu = testing::scalar_mat(0.5);
  double best = -1e300, best_s = 0;
  for (double s = 0.1; s < 5.0; s += 0.001) {
    const double g = grs(z, mu, testing::scalar_mat(s));
    if (g > best) {
      best = g;
      best_s = s;
    }
  }
  CHECK(best_s == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("RMSE identities") {
  const arma::mat z = {{1.0, 2.0, 3.0}};
  CHECK(rmse(z, z) == 0.0);
  CHECK(rmse(z, z + 2.0) == 2.0);
  const arma::mat p = {{2.0, 0.0, 3.0}};
  CHECK(rmse(z, p) == std::sqrt(5.0 / 3.0));
  CHECK(rmse(z, p) == rmse(p, z));
  CHECK_THROWS_AS(rmse(z, arma::ones(2, 2)), ArgumentError);
}
