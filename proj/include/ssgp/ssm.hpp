#pragma once

#include <armadillo>
#include <vector>

#include "ssgp/linalg.hpp"

namespace ssgp {

class Rng;

enum class Smoother { Conditional, Literal };

// Normal-Gamma state-space model with discount-driven precision.
//
// The observation vector at model time t = 1..T is split into `blocks` equal
// pieces of length N that share the correlation V: y_t = (y_t(1)', ..., y_t(B)')'.
// Block b observes its own slice of the state, theta_t(b) of length q / B,
// through the N x (q / B) matrix F_t(b). With one block this is the ordinary
// dense model y_t = F_t theta_t + e_t.
struct SsmSpec {
  std::vector<arma::mat> y;   // y[t-1]: N x B, column b = block b
  std::vector<arma::cube> F;  // F[t-1]: N x (q/B) x B
  arma::mat G;                // q x q; empty means identity
  arma::mat V;                // N x N observation correlation
  arma::mat W;                // q x q state correlation (unused with state_discount)
  double state_discount = 0;  // > 0: A_t = G M G' / delta instead of G M G' + W
  double omega = 1.0;
  arma::vec m0;
  arma::mat M0;
  double n0 = 1.0;
  double d0 = 1.0;
  bool store_forecast_cov = false;  // keep dense Q_t (small problems only)

  arma::uword T() const { return y.size(); }
  arma::uword N() const { return V.n_rows; }
  arma::uword blocks() const { return y.empty() ? 1 : y.front().n_cols; }
  arma::uword q() const { return m0.n_elem; }
  void validate() const;
};

// Filter output for t = 0..T; index 0 holds the prior.
struct FilterState {
  std::vector<arma::vec> a, m;
  std::vector<arma::mat> A, M;
  arma::vec n, d, n_star, d_star;
  std::vector<arma::vec> q;      // one-step forecast means F_t a_t, stacked
  std::vector<arma::mat> Q;      // F_t A_t F_t' + V (only with store_forecast_cov)
  arma::vec log_det_Q;           // log|Q_t|
  arma::vec quad_Q;              // e_t' Q_t^{-1} e_t
  arma::vec log_predictive;      // log p(y_t | y_{1:t-1}), Student-t with 2 n*_t dof

  arma::uword T() const { return m.size() - 1; }
  double log_likelihood() const { return arma::accu(log_predictive); }
};

struct StateDraw {
  arma::mat theta;  // q x (T + 1)
  arma::vec v;      // T + 1 variances
};

FilterState kalman_filter(const SsmSpec& spec);
StateDraw backward_sample(const FilterState& fs, const SsmSpec& spec, Rng& rng,
                          Smoother smoother = Smoother::Conditional);
StateDraw ffbs(const SsmSpec& spec, Rng& rng, Smoother smoother = Smoother::Conditional);

// Precision path v_{0:T}^{-1} given filtered Gamma parameters (n_t, d_t):
// v_T^{-1} ~ Gamma(n_T, d_T), v_t^{-1} = omega v_{t+1}^{-1} + Gamma((1 - omega) n_t, d_t).
// Returns the variances v_t.
// One backward step at fixed v_{t+1}: omega v_{t+1}^{-1} + Gamma((1 - omega) n_t, d_t).
double shifted_gamma_precision(double n_t, double d_t, double omega, double next_precision, Rng& rng);

arma::vec backward_precision(const arma::vec& n, const arma::vec& d, double omega, Rng& rng);

// Discounted variance-only model r_t ~ N(0, nu_t I). Columns of `residuals` are
// r_1..r_T; returns nu_{0:T}.
arma::vec sample_discount_variance(const arma::mat& residuals, double discount, double n0, double d0,
                                   Rng& rng);

// log density of the multivariate Student-t forecast with k observations.
double student_t_log_predictive(double n_star, double d_star, double k, double log_det_Q, double quad);

}  // namespace ssgp
