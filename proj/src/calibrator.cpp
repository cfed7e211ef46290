#include "ssgp/calibrator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

int CalibConfig::n_retained() const { return n_samples <= burn_in ? 0 : (n_samples - burn_in) / thin; }

void CalibConfig::validate() const {
  if (!(b > 0.0 && b <= 1.0)) throw ArgumentError("calibration: b must lie in (0, 1]");
  if (!(eps3 > 0.0)) throw ArgumentError("calibration: eps3 must be positive");
  if (n_samples <= burn_in || burn_in < 0 || thin < 1 || n_retained() < 1) {
    throw ArgumentError("calibration: invalid sample counts");
  }
  if (emulator_stride < 1) throw ArgumentError("calibration: emulator stride must be at least 1");
  if (!(n0 > 0.0) || !(d0 > 0.0)) throw ArgumentError("calibration: invalid Normal-Gamma prior");
}

double calib_loglik(const arma::mat& z, const Prediction& pred, const arma::mat& u, const arma::vec& nu) {
  const arma::uword S = z.n_rows, K = z.n_cols;
  if (pred.mean.n_rows != S || pred.mean.n_cols != K || u.n_rows != S || u.n_cols != K + 1 || nu.n_elem != K + 1) {
    throw ArgumentError("calib_loglik: shape mismatch");
  }
  double out = 0.0;
  for (arma::uword k = 0; k < K; ++k) {
    for (arma::uword s = 0; s < S; ++s) {
      double var = pred.var(s, k);
      if (var < 0.0) {
        warn("calibration predictive variance below zero, clamped to 0");
        var = 0.0;
      }
      var += nu[k + 1];
      if (!(var > 0.0)) throw NumericError("calib_loglik: zero total variance");
      const double e = z(s, k) - pred.mean(s, k) - u(s, k + 1);
      out += -0.5 * (std::log(2.0 * std::numbers::pi * var) + e * e / var);
    }
  }
  return out;
}

namespace {

LagFeed field_feed(const arma::mat& z_field, arma::uword p) {
  LagFeed feed;
  feed.kind = LagFeed::Kind::Recursive;
  feed.values = z_field.cols(0, p - 1);
  return feed;
}

SsmSpec bias_spec(const arma::mat& resid, const arma::mat& U, const CalibConfig& cfg) {
  const arma::uword S = resid.n_rows, K = resid.n_cols;
  SsmSpec spec;
  spec.y.resize(K);
  spec.F.resize(K);
  for (arma::uword k = 0; k < K; ++k) {
    spec.y[k] = resid.col(k).t();
    spec.F[k] = arma::cube(1, 1, S, arma::fill::ones);
  }
  spec.V = arma::mat(1, 1, arma::fill::ones);
  spec.W = U;
  spec.W.diag() += kJitter;
  spec.omega = cfg.b;
  spec.m0.zeros(S);
  spec.M0 = arma::eye(S, S);
  spec.n0 = cfg.n0;
  spec.d0 = cfg.d0;
  return spec;
}

}  // namespace

CalibrationDraws calibrate(const arma::mat& z_field, const EmulatorFit& fit, const CalibConfig& cfg) {
  cfg.validate();
  const arma::uword S = fit.S(), K = fit.K(), p = fit.p, d = fit.X.n_cols;
  if (z_field.n_rows != S || z_field.n_cols != K + p) throw ArgumentError("calibrate: field data must be S x T");
  if (!z_field.is_finite()) throw ArgumentError("calibrate: field data contain non-finite values");
  const std::size_t n_draws = fit.n_draws();
  if (n_draws == 0) throw ArgumentError("calibrate: emulator has no draws");

  const arma::mat z = z_field.cols(p, p + K - 1);
  const LagFeed feed = field_feed(z_field, p);
  const Domain& domain = fit.domain;
  const bool has_rho = cfg.bias_enabled && domain.range_dim() > 0;

  Rng rng(cfg.seed);
  arma::vec eta = cfg.eta_init.is_empty() ? arma::vec(d, arma::fill::value(0.5)) : cfg.eta_init;
  if (eta.n_elem != d || arma::any(eta <= 0.0) || arma::any(eta >= 1.0)) {
    throw ArgumentError("calibrate: eta_init must lie inside the unit cube");
  }
  arma::vec rho;
  if (has_rho) rho = cfg.rho_init.is_empty() ? arma::vec(domain.range_dim(), arma::fill::ones) : cfg.rho_init;
  arma::mat u(S, K + 1, arma::fill::zeros);
  arma::vec nu;
  {
    const Prediction pred = DrawPredictor(fit, 0).predict(eta, feed);
    nu = sample_discount_variance(z - pred.mean, cfg.b, cfg.n0, cfg.d0, rng);
  }

  CalibrationDraws out;
  const int n_keep = cfg.n_retained();
  out.eta.set_size(n_keep, d);
  out.rho.set_size(n_keep, has_rho ? rho.n_elem : 0);
  out.u.reserve(n_keep);
  out.nu.set_size(n_keep, K + 1);
  out.emu_index.set_size(n_keep);

  StepAdapter step_eta(cfg.eps3, cfg.adapt), step_rho(cfg.eps3, cfg.adapt);
  AcceptanceCounter acc_eta, acc_rho;
  bool wrapped = false;
  int kept = 0;
  for (int it = 1; it <= cfg.n_samples; ++it) {
    if (it == cfg.burn_in + 1) {
      step_eta.freeze();
      step_rho.freeze();
    }
    const bool burning = it <= cfg.burn_in;
    const std::size_t pos = static_cast<std::size_t>(it - 1) * cfg.emulator_stride;
    if (!wrapped && pos >= n_draws) {
      warn("calibration cycled through all stored emulator draws; wrapping around");
      wrapped = true;
    }
    const std::size_t j = pos % n_draws;
    try {
      const DrawPredictor predictor(fit, j);
      // eta given u and nu from the previous iteration
      Prediction cur_pred = predictor.predict(eta, feed);
      double cur = calib_loglik(z, cur_pred, u, nu);
      Prediction prop_pred;
      auto ll = [&](const arma::vec& e) {
        prop_pred = predictor.predict(e, feed);
        return calib_loglik(z, prop_pred, u, nu);
      };
      const bool ok = logit_rw_step(eta, cur, ll, step_eta.eps(), rng);
      step_eta.record(ok);
      if (!burning) acc_eta.record(ok);
      if (ok) cur_pred = std::move(prop_pred);

      // bias and field variance given the accepted eta
      const arma::mat resid = z - cur_pred.mean;
      if (cfg.bias_enabled) {
        if (has_rho) {
          std::vector<arma::mat> dU(K);
          for (arma::uword k = 1; k <= K; ++k) dU[k - 1] = (u.col(k) - u.col(k - 1)).t();
          auto corr_of = [&](const arma::vec& r) {
            StateCorr sc;
            sc.C = domain.corr(r);
            sc.delta.zeros(S);
            sc.hT = arma::mat(1, 1, arma::fill::ones);
            return sc;
          };
          auto ll_rho = [&](const arma::vec& r) {
            try {
              return corr_of(r).log_density(dU, nu);
            } catch (const NumericError&) {
              return -arma::datum::inf;
            }
          };
          double cur_rho = corr_of(rho).log_density(dU, nu);
          const bool okr = log_rw_step(rho, cur_rho, ll_rho, cfg.rho_prior, step_rho.eps(), rng);
          step_rho.record(okr);
          if (!burning) acc_rho.record(okr);
        }
        const arma::mat U = domain.corr(has_rho ? rho : arma::vec());
        const StateDraw bias = ffbs(bias_spec(resid, U, cfg), rng);
        u = bias.theta;
        nu = bias.v;
      } else {
        nu = sample_discount_variance(resid, cfg.b, cfg.n0, cfg.d0, rng);
      }
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "calibration sampler failed at iteration " << it << " (emulator draw " << j << "): " << e.what();
      throw NumericError(os.str());
    }

    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && kept < n_keep) {
      out.eta.row(kept) = eta.t();
      if (has_rho) out.rho.row(kept) = rho.t();
      out.u.push_back(u);
      out.nu.row(kept) = nu.t();
      out.emu_index[kept] = j;
      ++kept;
    }
  }
  out.accept_eta = acc_eta.rate();
  out.accept_rho = acc_rho.rate();
  return out;
}

ReplicateMoments posterior_replicates(const CalibrationDraws& draws, const EmulatorFit& fit,
                                      const arma::mat& z_field, Rng& rng) {
  if (draws.size() == 0) throw ArgumentError("posterior_replicates: no calibration draws");
  const arma::uword S = fit.S(), K = fit.K(), p = fit.p;
  if (z_field.n_rows != S || z_field.n_cols < p) throw ArgumentError("posterior_replicates: field data shape mismatch");
  const LagFeed feed = field_feed(z_field, p);
  arma::mat sum(S, K, arma::fill::zeros), sum_sq(S, K, arma::fill::zeros);
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const Prediction pred = DrawPredictor(fit, draws.emu_index[i]).predict(draws.eta.row(i).t(), feed);
    const arma::mat& u = draws.u[i];
    for (arma::uword k = 0; k < K; ++k) {
      for (arma::uword s = 0; s < S; ++s) {
        const double m = pred.mean(s, k) + u(s, k + 1);
        const double var = std::max(0.0, pred.var(s, k)) + draws.nu(i, k + 1);
        const double z = var > 0.0 ? m + std::sqrt(var) * rng.normal() : m;
        sum(s, k) += z;
        sum_sq(s, k) += z * z;
      }
    }
  }
  ReplicateMoments out;
  out.mean = sum / n;
  out.sd = arma::sqrt(arma::clamp(sum_sq / n - arma::square(out.mean), 0.0, arma::datum::inf));
  return out;
}

}  // namespace ssgp
