#include "ssgp/mcmc.hpp"

#include <cmath>
#include <numbers>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

double LogNormalPrior::log_density(const arma::vec& x) const {
  double out = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) return -arma::datum::inf;
    const double z = (std::log(v) - mean) / sd;
    out += -std::log(v) - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
  }
  return out;
}

double logit(double x) { return std::log(x) - std::log1p(-x); }
double inv_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool log_rw_step(arma::vec& x, double& current_log_lik, const std::function<double(const arma::vec&)>& log_lik,
                 const LogNormalPrior& prior, double eps, Rng& rng) {
  if (x.is_empty()) return false;
  const arma::vec prop = arma::exp(arma::log(x) + eps * rng.normal(x.n_elem));
  for (double v : prop) {
    if (!(v > 0.0) || !std::isfinite(v)) return false;
  }
  const double prop_log_lik = log_lik(prop);
  if (std::isnan(prop_log_lik)) throw NumericError("log_rw_step: likelihood is NaN at the proposal");
  // log J(x) - log J(x*) = sum log x* - sum log x
  const double log_ratio = prop_log_lik - current_log_lik + prior.log_density(prop) - prior.log_density(x) +
                           arma::accu(arma::log(prop)) - arma::accu(arma::log(x));
  if (std::log(rng.uniform()) < log_ratio) {
    x = prop;
    current_log_lik = prop_log_lik;
    return true;
  }
  return false;
}

bool logit_rw_step(arma::vec& x, double& current_log_lik, const std::function<double(const arma::vec&)>& log_lik,
                   double eps, Rng& rng) {
  arma::vec prop(x.n_elem);
  const arma::vec step = eps * rng.normal(x.n_elem);
  for (arma::uword i = 0; i < x.n_elem; ++i) {
    prop[i] = inv_logit(logit(x[i]) + step[i]);
    if (!(prop[i] > 0.0 && prop[i] < 1.0)) return false;
  }
  const double prop_log_lik = log_lik(prop);
  if (std::isnan(prop_log_lik)) throw NumericError("logit_rw_step: likelihood is NaN at the proposal");
  double log_jac = 0.0;  // log J(x) - log J(x*)
  for (arma::uword i = 0; i < x.n_elem; ++i) {
    log_jac += std::log(prop[i]) + std::log1p(-prop[i]) - std::log(x[i]) - std::log1p(-x[i]);
  }
  const double log_ratio = prop_log_lik - current_log_lik + log_jac;
  if (std::log(rng.uniform()) < log_ratio) {
    x = prop;
    current_log_lik = prop_log_lik;
    return true;
  }
  return false;
}

StepAdapter::StepAdapter(double eps, bool enabled, double target, int window)
    : eps_(eps), enabled_(enabled), target_(target), window_(window) {
  if (!(eps > 0.0)) throw ArgumentError("MH step size must be positive");
}

void StepAdapter::record(bool accepted) {
  if (!enabled_) return;
  ++count_;
  accepted_ += accepted ? 1 : 0;
  if (count_ < window_) return;
  const double rate = static_cast<double>(accepted_) / count_;
  eps_ *= std::exp(rate - target_);
  eps_ = std::clamp(eps_, 1e-4, 5.0);
  count_ = accepted_ = 0;
}

}  // namespace ssgp
