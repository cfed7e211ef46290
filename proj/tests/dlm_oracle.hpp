#pragma once

// Brute-force joint Gaussian of (theta_0..theta_T, y_1..y_T) for a one-block
// linear model at unit variance scale. Filtering and smoothing moments come
// from conditioning the joint directly.

#include <armadillo>
#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"

namespace testing {

struct DenseDlm {
  std::vector<arma::mat> F;  // N x q per time
  std::vector<arma::vec> y;  // N per time
  arma::mat G, W, V, M0;
  arma::vec m0;
  double n0 = 1.0, d0 = 1.0;

  arma::uword q() const { return m0.n_elem; }
  arma::uword N() const { return V.n_rows; }
  arma::uword T() const { return y.size(); }
  arma::uword theta_at(arma::uword t) const { return t * q(); }
  arma::uword y_at(arma::uword t) const { return (T() + 1) * q() + (t - 1) * N(); }

  void joint(arma::vec& mu, arma::mat& Sigma) const {
    const arma::uword q_ = q(), N_ = N(), T_ = T();
    // z = (theta_0, tau_1..tau_T, eps_1..eps_T)
    const arma::uword nz = q_ * (T_ + 1) + N_ * T_;
    arma::vec mz(nz, arma::fill::zeros);
    arma::mat Sz(nz, nz, arma::fill::zeros);
    mz.subvec(0, q_ - 1) = m0;
    Sz.submat(0, 0, q_ - 1, q_ - 1) = M0;
    for (arma::uword t = 1; t <= T_; ++t) {
      const arma::uword a = t * q_;
      Sz.submat(a, a, a + q_ - 1, a + q_ - 1) = W;
      const arma::uword b = (T_ + 1) * q_ + (t - 1) * N_;
      Sz.submat(b, b, b + N_ - 1, b + N_ - 1) = V;
    }
    arma::mat L(nz, nz, arma::fill::zeros);
    // theta_t = G theta_{t-1} + tau_t
    std::vector<arma::mat> rows(T_ + 1);
    rows[0] = arma::zeros(q_, nz);
    rows[0].cols(0, q_ - 1) = arma::eye(q_, q_);
    for (arma::uword t = 1; t <= T_; ++t) {
      rows[t] = G * rows[t - 1];
      rows[t].cols(t * q_, t * q_ + q_ - 1) += arma::eye(q_, q_);
    }
    for (arma::uword t = 0; t <= T_; ++t) L.rows(t * q_, t * q_ + q_ - 1) = rows[t];
    for (arma::uword t = 1; t <= T_; ++t) {
      const arma::uword b = (T_ + 1) * q_ + (t - 1) * N_;
      L.rows(b, b + N_ - 1) = F[t - 1] * rows[t];
      L.submat(b, b, b + N_ - 1, b + N_ - 1) += arma::eye(N_, N_);
    }
    mu = L * mz;
    Sigma = L * Sz * L.t();
  }

  arma::uvec obs_upto(arma::uword t) const {
    if (t == 0) return {};
    return arma::regspace<arma::uvec>(y_at(1), y_at(t) + N() - 1);
  }
  arma::vec y_upto(arma::uword t) const {
    arma::vec out(t * N());
    for (arma::uword s = 1; s <= t; ++s) out.subvec((s - 1) * N(), s * N() - 1) = y[s - 1];
    return out;
  }

  // Moments of theta_t given y_{1:t}.
  void filtered(arma::uword t, arma::vec& m, arma::mat& M) const {
    arma::vec mu;
    arma::mat Sigma;
    joint(mu, Sigma);
    arma::uvec keep = arma::regspace<arma::uvec>(theta_at(t), theta_at(t) + q() - 1);
    arma::uvec obs = obs_upto(t);
    arma::uvec idx = arma::join_cols(keep, obs);
    const GaussCond c = condition(mu.elem(idx), Sigma.submat(idx, idx),
                                  obs.is_empty() ? arma::uvec{} : arma::regspace<arma::uvec>(q(), idx.n_elem - 1),
                                  y_upto(t));
    m = c.mean;
    M = c.cov;
  }

  // Mean and scale of y_t given y_{1:t-1}.
  void forecast(arma::uword t, arma::vec& f, arma::mat& Q) const {
    arma::vec mu;
    arma::mat Sigma;
    joint(mu, Sigma);
    arma::uvec keep = arma::regspace<arma::uvec>(y_at(t), y_at(t) + N() - 1);
    arma::uvec obs = obs_upto(t - 1);
    arma::uvec idx = arma::join_cols(keep, obs);
    const GaussCond c = condition(mu.elem(idx), Sigma.submat(idx, idx),
                                  obs.is_empty() ? arma::uvec{} : arma::regspace<arma::uvec>(N(), idx.n_elem - 1),
                                  y_upto(t - 1));
    f = c.mean;
    Q = c.cov;
  }

  // Joint smoothing moments of theta_{0:T} given y_{1:T}, unit scale.
  void smoothed(arma::vec& m, arma::mat& M) const {
    arma::vec mu;
    arma::mat Sigma;
    joint(mu, Sigma);
    const arma::uword nth = (T() + 1) * q();
    const GaussCond c = condition(mu, Sigma, arma::regspace<arma::uvec>(nth, mu.n_elem - 1), y_upto(T()));
    m = c.mean;
    M = c.cov;
  }

  // Static variance (omega = 1): Gamma posterior of the precision after y_{1:t}.
  void precision_posterior(arma::uword t, double& n, double& d) const {
    arma::vec mu;
    arma::mat Sigma;
    joint(mu, Sigma);
    n = n0 + 0.5 * static_cast<double>(t * N());
    d = d0;
    if (t == 0) return;
    const arma::uvec obs = obs_upto(t);
    const arma::vec e = y_upto(t) - mu.elem(obs);
    d += 0.5 * arma::as_scalar(e.t() * arma::solve(Sigma.submat(obs, obs), e));
  }

  // log p(y_{1:T}) with the precision integrated out: multivariate Student-t.
  double log_marginal() const {
    arma::vec mu;
    arma::mat Sigma;
    joint(mu, Sigma);
    const arma::uvec obs = obs_upto(T());
    const arma::vec e = y_upto(T()) - mu.elem(obs);
    const arma::mat S = Sigma.submat(obs, obs);
    const double k = static_cast<double>(obs.n_elem);
    double val, sign;
    arma::log_det(val, sign, S);
    const double quad = arma::as_scalar(e.t() * arma::solve(S, e));
    return std::lgamma(n0 + 0.5 * k) - std::lgamma(n0) + n0 * std::log(d0) - 0.5 * k * std::log(2.0 * std::numbers::pi) -
           0.5 * val - (n0 + 0.5 * k) * std::log(d0 + 0.5 * quad);
  }
};

}  // namespace testing
