#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ssgp/calibrator.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"
#include "support.hpp"
#include "toy.hpp"

using namespace ssgp;

namespace {

EmulatorFit toy_fit(std::uint64_t seed, arma::uword N = 10) {
  const Ensemble e = testing::toy_ensemble(N, 2, 6, seed);
  EmulatorConfig c;
  c.mode = EmulatorMode::Spatial;
  c.n_samples = 600;
  c.burn_in = 200;
  c.thin = 10;
  c.seed = seed;
  return fit_emulator(e, c);
}

// Field series equal to training run i (S x T).
arma::mat run_series(const EmulatorFit& fit, arma::uword i) {
  arma::mat z(fit.S(), fit.Y.n_slices);
  for (arma::uword t = 0; t < z.n_cols; ++t) z.col(t) = fit.Y.slice(t).row(i).t();
  return z;
}

CalibConfig quick_calib(std::uint64_t seed) {
  CalibConfig c;
  c.n_samples = 3000;
  c.burn_in = 1000;
  c.thin = 5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("calibration likelihood against direct densities") {
  Prediction pred;
  pred.mean = {{0.5, -1.0}};
  pred.var = {{0.2, 0.1}};
  const arma::mat z = {{0.7, -0.4}};
  const arma::mat u = {{0.0, 0.1, 0.3}};
  const arma::vec nu = {9.0, 0.5, 0.25};
  auto lognorm = [](double x, double m, double v) {
    return -0.5 * std::log(2 * std::numbers::pi * v) - (x - m) * (x - m) / (2 * v);
  };
  const double expect = lognorm(0.7, 0.6, 0.7) + lognorm(-0.4, -0.7, 0.35);
  CHECK(calib_loglik(z, pred, u, nu) == doctest::Approx(expect).epsilon(1e-14));

  // exact fit with unit total variance
  Prediction unit;
  unit.mean = arma::reshape(arma::linspace(0, 1, 6), 2, 3);
  unit.var = arma::zeros(2, 3);
  const double ll = calib_loglik(unit.mean, unit, arma::zeros(2, 4), arma::ones(4));
  CHECK(ll == doctest::Approx(-3.0 * std::log(2 * std::numbers::pi)));
  CHECK(calib_loglik(unit.mean, unit, arma::zeros(2, 4), 2.0 * arma::ones(4)) < ll);
  CHECK_THROWS_AS(calib_loglik(z, pred, u, arma::ones(2)), ArgumentError);
}

TEST_CASE("calibration recovers a training input without noise or bias") {
  int covered = 0, near = 0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    const EmulatorFit fit = toy_fit(100 + seed);
    const arma::uword k = 3;
    const arma::vec truth = fit.X.row(k).t();
    CalibConfig cfg = quick_calib(seed);
    cfg.bias_enabled = false;
    const CalibrationDraws d = calibrate(run_series(fit, k), fit, cfg);
    CHECK(d.eta.min() > 0.0);
    CHECK(d.eta.max() < 1.0);
    bool cover = true;
    for (arma::uword j = 0; j < truth.n_elem; ++j) {
      const arma::vec q = arma::quantile(d.eta.col(j), arma::vec{0.025, 0.975});
      cover = cover && q[0] <= truth[j] && truth[j] <= q[1];
    }
    // the first input drives the toy output strongly, the second only weakly
    const bool cell = std::abs(arma::median(d.eta.col(0)) - truth[0]) < 0.1;
    covered += cover;
    near += cell;
  }
  CHECK(covered >= 4);
  CHECK(near >= 4);
}

TEST_CASE("constant bias variance without bias and discount") {
  const EmulatorFit fit = toy_fit(7);
  CalibConfig cfg = quick_calib(3);
  cfg.n_samples = 400;
  cfg.burn_in = 100;
  cfg.bias_enabled = false;
  cfg.b = 1.0;
  const CalibrationDraws d = calibrate(run_series(fit, 0), fit, cfg);
  for (arma::uword i = 0; i < d.nu.n_rows; ++i) CHECK(d.nu.row(i).max() == d.nu.row(i).min());
  CHECK(arma::accu(arma::abs(d.u.front())) == 0.0);
}

TEST_CASE("bias absorbs a known offset") {
  const EmulatorFit fit = toy_fit(9);
  arma::mat z = run_series(fit, 2);
  const arma::vec c = {0.4, -0.3};
  // the lag start stays exact, so recursive predictions at the true input match the run
  for (arma::uword t = fit.p; t < z.n_cols; ++t) z.col(t) += c;
  CalibConfig cfg = quick_calib(4);
  cfg.eta_init = fit.X.row(2).t();
  const CalibrationDraws d = calibrate(z, fit, cfg);
  const arma::uword K = fit.K();
  for (arma::uword t = 1; t <= K; ++t) {
    for (arma::uword s = 0; s < 2; ++s) {
      arma::vec us(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) us[i] = d.u[i](s, t);
      CHECK(std::abs(arma::mean(us) - c[s]) < 2.0 * arma::stddev(us));
    }
  }
  CHECK(arma::all(arma::vectorise(d.nu) > 0.0));
}

TEST_CASE("emulator draws are cycled in order") {
  const EmulatorFit fit = toy_fit(5);
  CalibConfig cfg = quick_calib(5);
  cfg.n_samples = 300;
  cfg.burn_in = 0;
  cfg.thin = 1;
  cfg.emulator_stride = 3;
  set_warnings_enabled(false);
  const CalibrationDraws d = calibrate(run_series(fit, 1), fit, cfg);
  set_warnings_enabled(true);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.emu_index[i] == (3 * i) % fit.n_draws());
}

TEST_CASE("calibration is a pure function of its inputs") {
  const EmulatorFit fit = toy_fit(6);
  CalibConfig cfg = quick_calib(8);
  cfg.n_samples = 500;
  cfg.burn_in = 100;
  const arma::mat z = run_series(fit, 4);
  const CalibrationDraws a = calibrate(z, fit, cfg), b = calibrate(z, fit, cfg);
  CHECK(testing::max_abs(a.eta - b.eta) == 0.0);
  CHECK(testing::max_abs(a.nu - b.nu) == 0.0);
}

TEST_CASE("replicate moments match the mixture they sample") {
  const EmulatorFit fit = toy_fit(11, 6);
  const arma::uword S = fit.S(), K = fit.K();
  const arma::mat zf = run_series(fit, 0);
  // three fixed parameter settings repeated many times
  const arma::mat etas = {{0.2, 0.3}, {0.5, 0.5}, {0.8, 0.1}};
  const int reps = 10000;
  CalibrationDraws d;
  d.eta.set_size(3 * reps, 2);
  d.nu.set_size(3 * reps, K + 1);
  d.emu_index.set_size(3 * reps);
  for (int i = 0; i < 3 * reps; ++i) {
    const int c = i % 3;
    d.eta.row(i) = etas.row(c);
    d.nu.row(i).fill(0.01 * (c + 1));
    d.emu_index[i] = c;
    d.u.push_back(arma::mat(S, K + 1, arma::fill::value(0.1 * c)));
  }
  Rng rng(2);
  const ReplicateMoments m = posterior_replicates(d, fit, zf, rng);
  LagFeed feed;
  feed.values = zf.cols(0, fit.p - 1);
  arma::mat mean(S, K, arma::fill::zeros), second(S, K, arma::fill::zeros);
  for (int c = 0; c < 3; ++c) {
    const Prediction p = DrawPredictor(fit, c).predict(etas.row(c).t(), feed);
    const arma::mat mu = p.mean + 0.1 * c;
    const arma::mat var = p.var + 0.01 * (c + 1);
    mean += mu / 3.0;
    second += (var + arma::square(mu)) / 3.0;
  }
  const arma::mat sd = arma::sqrt(second - arma::square(mean));
  const double n = 3.0 * reps;
  for (arma::uword i = 0; i < mean.n_elem; ++i) {
    CHECK(std::abs(m.mean[i] - mean[i]) < 4.0 * sd[i] / std::sqrt(n));
    CHECK(m.sd[i] == doctest::Approx(sd[i]).epsilon(0.03));
  }
}

TEST_CASE("deterministic replicate with no spread") {
  const EmulatorFit fit = toy_fit(12, 6);
  const arma::mat zf = run_series(fit, 3);
  CalibrationDraws d;
  d.eta = fit.X.row(3);
  d.nu = arma::zeros(1, fit.K() + 1);
  d.emu_index = {0};
  d.u.push_back(arma::zeros(fit.S(), fit.K() + 1));
  Rng rng(1);
  const ReplicateMoments m = posterior_replicates(d, fit, zf, rng);
  // a single sample has no spread; at a training input the predictive variance is at jitter level
  CHECK(testing::max_abs(m.sd) < 1e-6);
  CHECK(testing::max_abs(m.mean - zf.cols(fit.p, zf.n_cols - 1)) < 1e-3);
  CHECK_THROWS_AS(posterior_replicates(CalibrationDraws{}, fit, zf, rng), ArgumentError);
}

TEST_CASE("calibration settings are validated") {
  CalibConfig c;
  c.b = 0.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = CalibConfig{};
  c.eps3 = -1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}
