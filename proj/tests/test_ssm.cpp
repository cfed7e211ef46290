#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "dlm_oracle.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"
#include "ssgp/ssm.hpp"
#include "support.hpp"

using namespace ssgp;
using testing::DenseDlm;

namespace {

DenseDlm small_model(arma::uword q, arma::uword N, arma::uword T, std::uint64_t seed) {
  Rng rng(seed);
  DenseDlm m;
  m.G = arma::eye(q, q);
  arma::mat Aw = arma::reshape(rng.normal(q * q), q, q);
  m.W = 0.2 * Aw * Aw.t() + 0.1 * arma::eye(q, q);
  arma::mat Av = arma::reshape(rng.normal(N * N), N, N);
  m.V = Av * Av.t() / N + arma::eye(N, N);
  m.m0 = rng.normal(q);
  m.M0 = 2.0 * arma::eye(q, q);
  m.n0 = 2.0;
  m.d0 = 1.5;
  for (arma::uword t = 0; t < T; ++t) {
    m.F.push_back(arma::reshape(rng.normal(N * q), N, q));
    m.y.push_back(rng.normal(N));
  }
  return m;
}

SsmSpec to_spec(const DenseDlm& m, double omega) {
  SsmSpec s;
  for (arma::uword t = 0; t < m.T(); ++t) {
    s.y.push_back(arma::mat(m.y[t]));
    arma::cube F(m.N(), m.q(), 1);
    F.slice(0) = m.F[t];
    s.F.push_back(F);
  }
  s.G = m.G;
  s.V = m.V;
  s.W = m.W;
  s.m0 = m.m0;
  s.M0 = m.M0;
  s.n0 = m.n0;
  s.d0 = m.d0;
  s.omega = omega;
  return s;
}

}  // namespace

TEST_CASE("filter moments match dense conditioning") {
  // q < N exercises the compressed update, q >= N the direct one
  for (auto [q, N] : {std::pair<arma::uword, arma::uword>{1, 2}, {2, 5}, {3, 2}, {2, 2}}) {
    CAPTURE(q);
    CAPTURE(N);
    const DenseDlm m = small_model(q, N, 5, 17 + q * 10 + N);
    const FilterState fs = kalman_filter(to_spec(m, 1.0));
    for (arma::uword t = 0; t <= m.T(); ++t) {
      arma::vec mt;
      arma::mat Mt;
      m.filtered(t, mt, Mt);
      CHECK(testing::max_abs(fs.m[t] - mt) < 1e-9);
      CHECK(testing::max_abs(fs.M[t] - Mt) < 1e-9);
      double n, d;
      m.precision_posterior(t, n, d);
      CHECK(fs.n[t] == doctest::Approx(n).epsilon(1e-12));
      CHECK(fs.d[t] == doctest::Approx(d).epsilon(1e-10));
    }
    CHECK(fs.log_likelihood() == doctest::Approx(m.log_marginal()).epsilon(1e-10));
  }
}

TEST_CASE("discounted precision recursion with dense one-step forecasts") {
  const DenseDlm m = small_model(2, 3, 6, 5);
  const double omega = 0.8;
  SsmSpec spec = to_spec(m, omega);
  spec.store_forecast_cov = true;
  const FilterState fs = kalman_filter(spec);
  double n = m.n0, d = m.d0;
  for (arma::uword t = 1; t <= m.T(); ++t) {
    arma::vec f;
    arma::mat Q;
    m.forecast(t, f, Q);
    const arma::vec e = m.y[t - 1] - f;
    const double quad = arma::as_scalar(e.t() * arma::solve(Q, e));
    double ld, sign;
    arma::log_det(ld, sign, Q);
    const double ns = omega * n, ds = omega * d;
    const double k = static_cast<double>(m.N());
    // Student-t density written out from its definition
    const double lp = std::lgamma(ns + k / 2) - std::lgamma(ns) - 0.5 * k * std::log(2 * M_PI * ds / 1.0) - 0.5 * ld -
                      (ns + k / 2) * std::log(1 + quad / (2 * ds));
    n = ns + k / 2;
    d = ds + quad / 2;
    CHECK(fs.n[t] == doctest::Approx(n).epsilon(1e-12));
    CHECK(fs.d[t] == doctest::Approx(d).epsilon(1e-10));
    CHECK(fs.log_predictive[t] == doctest::Approx(lp).epsilon(1e-10));
    CHECK(testing::max_abs(fs.Q[t] - Q) < 1e-9);
    CHECK(testing::max_abs(fs.q[t] - f) < 1e-9);
    arma::vec mt;
    arma::mat Mt;
    m.filtered(t, mt, Mt);
    CHECK(testing::max_abs(fs.m[t] - mt) < 1e-9);
  }
}

TEST_CASE("blocked observations equal the stacked dense model") {
  // two blocks of N = 3 sharing V, each observing its own q/B = 2 slice of the state
  Rng rng(3);
  const arma::uword N = 3, pb = 2, B = 2, T = 4;
  SsmSpec blk;
  DenseDlm dense;
  arma::mat Av = arma::reshape(rng.normal(N * N), N, N);
  blk.V = Av * Av.t() / N + arma::eye(N, N);
  arma::mat Aw = arma::reshape(rng.normal(16), 4, 4);
  blk.W = 0.3 * Aw * Aw.t() + 0.05 * arma::eye(4, 4);
  blk.m0 = rng.normal(4);
  blk.M0 = arma::eye(4, 4);
  blk.n0 = 1.0;
  blk.d0 = 2.0;
  blk.omega = 1.0;
  dense.G = arma::eye(4, 4);
  dense.W = blk.W;
  dense.V = arma::kron(arma::eye(B, B), blk.V);
  dense.m0 = blk.m0;
  dense.M0 = blk.M0;
  dense.n0 = blk.n0;
  dense.d0 = blk.d0;
  for (arma::uword t = 0; t < T; ++t) {
    arma::cube F(N, pb, B);
    F.slice(0) = arma::reshape(rng.normal(N * pb), N, pb);
    F.slice(1) = arma::reshape(rng.normal(N * pb), N, pb);
    arma::mat Y = arma::reshape(rng.normal(N * B), N, B);
    blk.F.push_back(F);
    blk.y.push_back(Y);
    arma::mat Fd(N * B, pb * B, arma::fill::zeros);
    Fd.submat(0, 0, N - 1, pb - 1) = F.slice(0);
    Fd.submat(N, pb, 2 * N - 1, 2 * pb - 1) = F.slice(1);
    dense.F.push_back(Fd);
    dense.y.push_back(arma::vectorise(Y));
  }
  const FilterState fs = kalman_filter(blk);
  for (arma::uword t = 1; t <= T; ++t) {
    arma::vec mt;
    arma::mat Mt;
    dense.filtered(t, mt, Mt);
    CHECK(testing::max_abs(fs.m[t] - mt) < 1e-9);
    CHECK(testing::max_abs(fs.M[t] - Mt) < 1e-9);
  }
  CHECK(fs.log_likelihood() == doctest::Approx(dense.log_marginal()).epsilon(1e-10));
}

TEST_CASE("non-identity evolution matrix") {
  DenseDlm m = small_model(2, 3, 5, 11);
  m.G = {{0.9, 0.1}, {-0.2, 0.7}};
  const FilterState fs = kalman_filter(to_spec(m, 1.0));
  for (arma::uword t = 1; t <= m.T(); ++t) {
    arma::vec mt;
    arma::mat Mt;
    m.filtered(t, mt, Mt);
    CHECK(testing::max_abs(fs.m[t] - mt) < 1e-9);
    CHECK(testing::max_abs(fs.M[t] - Mt) < 1e-9);
  }
  CHECK(fs.log_likelihood() == doctest::Approx(m.log_marginal()).epsilon(1e-10));
}

TEST_CASE("state discount replaces W with an inflated prior scale") {
  const DenseDlm m = small_model(2, 3, 3, 2);
  SsmSpec spec = to_spec(m, 1.0);
  spec.state_discount = 0.9;
  const FilterState fs = kalman_filter(spec);
  for (arma::uword t = 1; t <= m.T(); ++t) {
    CHECK(testing::max_abs(fs.A[t] - fs.M[t - 1] / 0.9) < 1e-12);
  }
}

TEST_CASE("backward samplers reproduce smoothing moments") {
  const DenseDlm m = small_model(1, 2, 4, 23);
  const SsmSpec spec = to_spec(m, 1.0);
  const FilterState fs = kalman_filter(spec);
  arma::vec ms;
  arma::mat Ms;
  m.smoothed(ms, Ms);
  double nT, dT;
  m.precision_posterior(m.T(), nT, dT);
  const arma::mat cov = Ms * dT / (nT - 1.0);

  for (Smoother sm : {Smoother::Conditional, Smoother::Literal}) {
    Rng rng(99);
    const int n = 20000;
    arma::mat draws(ms.n_elem, n);
    for (int i = 0; i < n; ++i) draws.col(i) = arma::vectorise(backward_sample(fs, spec, rng, sm).theta);
    const arma::vec mean = arma::mean(draws, 1);
    const arma::vec sd = arma::sqrt(cov.diag());
    for (arma::uword j = 0; j < ms.n_elem; ++j) {
      CHECK(std::abs(mean[j] - ms[j]) < 4.0 * sd[j] / std::sqrt(n));
    }
    const arma::mat emp = arma::cov(draws.t());
    for (arma::uword j = 0; j < ms.n_elem; ++j) {
      CHECK(emp(j, j) == doctest::Approx(cov(j, j)).epsilon(0.06));
    }
    if (sm == Smoother::Conditional) {
      // the conditional sampler also gets the cross-time dependence right
      CHECK(emp(0, ms.n_elem - 1) == doctest::Approx(cov(0, ms.n_elem - 1)).epsilon(0.1));
    }
  }
}

TEST_CASE("precision path is constant without discounting") {
  Rng rng(4);
  const arma::vec n = {1, 2, 3, 4}, d = {1, 1.5, 2, 3};
  const arma::vec v = backward_precision(n, d, 1.0, rng);
  CHECK(testing::max_abs(v - v[3]) == 0.0);
}

TEST_CASE("shifted gamma backward step has the right law") {
  Rng rng(8);
  const double n_t = 6.0, d_t = 2.5, omega = 0.7, next = 1.3;
  std::vector<double> x;
  for (int i = 0; i < 20000; ++i) x.push_back(shifted_gamma_precision(n_t, d_t, omega, next, rng));
  const double a = (1 - omega) * n_t;
  const double D = testing::ks_statistic(x, [&](double u) {
    return u <= omega * next ? 0.0 : boost::math::gamma_p(a, d_t * (u - omega * next));
  });
  CHECK(testing::ks_pvalue(D, x.size()) > 0.01);
}

TEST_CASE("discount variance sampler") {
  Rng rng(12);
  arma::mat r(50, 8, arma::fill::zeros);
  Rng g(1);
  for (arma::uword t = 0; t < 8; ++t) r.col(t) = 2.0 * g.normal(50);
  // 8 steps, 50 residuals each with variance 4: the last precision concentrates near 1/4
  double acc = 0;
  for (int i = 0; i < 2000; ++i) acc += 1.0 / sample_discount_variance(r, 0.95, 1, 1, rng)[8];
  CHECK(acc / 2000 == doctest::Approx(0.25).epsilon(0.15));
  CHECK_THROWS_AS(sample_discount_variance(r, 0.0, 1, 1, rng), ArgumentError);
}

TEST_CASE("filter rejects inconsistent shapes") {
  DenseDlm m = small_model(1, 2, 3, 1);
  SsmSpec spec = to_spec(m, 1.0);
  spec.m0 = arma::vec(3, arma::fill::zeros);
  CHECK_THROWS_AS(kalman_filter(spec), ArgumentError);
  spec = to_spec(m, 1.5);
  CHECK_THROWS_AS(kalman_filter(spec), ArgumentError);
}
