#pragma once

#include <armadillo>
#include <functional>

namespace ssgp {

class Rng;

// Independent log-normal(mean, sd^2) prior on every coordinate.
struct LogNormalPrior {
  double mean = 0.0;
  double sd = 1.5;
  double log_density(const arma::vec& x) const;
};

// One log-scale random-walk Metropolis-Hastings step, x* = exp(log x + N(0, eps^2 I)),
// accepted with probability L(x*) p(x*) J(x) / (L(x) p(x) J(x*)) where J(x) = prod 1/x_i.
// `current_log_lik` must hold log L(x) and is updated on acceptance.
bool log_rw_step(arma::vec& x, double& current_log_lik, const std::function<double(const arma::vec&)>& log_lik,
                 const LogNormalPrior& prior, double eps, Rng& rng);

// Logit-scale random walk on the open unit cube with uniform prior; J(x) = prod 1/(x_i (1 - x_i)).
bool logit_rw_step(arma::vec& x, double& current_log_lik, const std::function<double(const arma::vec&)>& log_lik,
                   double eps, Rng& rng);

double logit(double x);
double inv_logit(double z);

// Burn-in step-size tuning toward a target acceptance rate; frozen afterwards.
class StepAdapter {
 public:
  StepAdapter(double eps, bool enabled, double target = 0.3, int window = 50);
  void record(bool accepted);
  void freeze() { enabled_ = false; }
  double eps() const { return eps_; }

 private:
  double eps_;
  bool enabled_;
  double target_;
  int window_;
  int count_ = 0;
  int accepted_ = 0;
};

struct AcceptanceCounter {
  long long tried = 0;
  long long accepted = 0;
  void record(bool ok) {
    ++tried;
    accepted += ok ? 1 : 0;
  }
  double rate() const { return tried == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(tried); }
};

}  // namespace ssgp
