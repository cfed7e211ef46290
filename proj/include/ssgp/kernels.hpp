#pragma once

#include <armadillo>
#include <string>

#include "ssgp/linalg.hpp"

namespace ssgp {

class Rng;

// exp(-sum_i beta_i (x_i - x'_i)^2)
double sq_exp_corr(const arma::vec& x, const arma::vec& x_prime, const arma::vec& beta);

// Rows of X are points. Unit diagonal, no jitter.
arma::mat corr_matrix(const arma::mat& X, const arma::vec& beta);

// Correlations between the rows of X (N) and the rows of Z (M): N x M.
arma::mat cross_corr(const arma::mat& X, const arma::mat& Z, const arma::vec& beta);

// h(T): the correlation matrix of the covariance T.
arma::mat corr_from_cov(const arma::mat& T);

// Correlation of a network from its 0/1 adjacency matrix: I + A / max degree.
arma::mat network_corr(const arma::mat& adjacency);

void check_positive(const arma::vec& x, const std::string& what);

// W = H (x) T kept in factored form. Vectors are stacked location-major, so the
// p x S matrix X with column s holding block s corresponds to vec(X).
class KroneckerCorr {
 public:
  KroneckerCorr(arma::mat H, arma::mat T);

  const arma::mat& H() const { return H_; }
  const arma::mat& T() const { return T_; }
  arma::uword S() const { return H_.n_rows; }
  arma::uword p() const { return T_.n_rows; }

  // log|H (x) T| = p log|H| + S log|T|
  double log_det() const;
  // vec(X)' W^{-1} vec(X) = tr(T^{-1} X H^{-1} X')
  double quad_form(const arma::mat& X) const;
  double quad_form(const arma::vec& u) const;
  // W^{-1} u = vec(T^{-1} X H^{-1})
  arma::vec solve(const arma::vec& u) const;
  arma::mat dense() const;
  arma::mat dense_inverse() const;

 private:
  arma::mat H_, T_;
  Cholesky cH_, cT_;
};

// H from the squared exponential over `locations` (rows), with `jitter` on its
// diagonal.
KroneckerCorr kron_corr(const arma::mat& locations, const arma::vec& omega_sp, const arma::mat& T,
                        double jitter = kJitter);

struct KnotSet {
  arma::mat knots;  // S* x dim
  std::string placement = "grid";
};

// Knots on a regular per_dim^dim grid over the bounding box of `locations`,
// each snapped to its nearest location; duplicates are dropped.
KnotSet grid_knots(const arma::mat& locations, arma::uword per_dim);
KnotSet random_knots(const arma::mat& locations, arma::uword count, Rng& rng);

// Gaussian predictive process built from a knot set. For s, s' the cross
// correlation block is K**(s,s') = (w(s)' H* w(s')) T + 1(s = s') Delta(s) with
// kriging weights w(s) = H*^{-1} c(s) and Delta(s) = diag(T) (1 - w(s)' H* w(s)).
class PredictiveProcess {
 public:
  PredictiveProcess(arma::mat knots, const arma::vec& omega_sp, arma::mat T, double jitter = kJitter);

  arma::uword n_knots() const { return knots_.n_rows; }
  const arma::mat& knot_corr() const { return Hk_; }

  arma::vec weights(const arma::vec& s) const;
  // Spatial factor w(s)' H* w(s') of the low rank part.
  double low_rank(const arma::vec& s, const arma::vec& s_prime) const;
  // delta(s) = 1 - w(s)' H* w(s), clamped at zero; Delta(s) = delta(s) diag(T).
  double delta(const arma::vec& s) const;
  arma::mat block(const arma::vec& s, const arma::vec& s_prime) const;

  // S x S matrix of low_rank(s_i, s_j).
  arma::mat low_rank_corr(const arma::mat& locations) const;
  // low_rank_corr + diag(delta); the predictive-process analogue of H.
  arma::mat location_corr(const arma::mat& locations) const;
  arma::vec deltas(const arma::mat& locations) const;

 private:
  arma::mat knots_;
  arma::vec omega_;
  arma::mat T_;
  arma::mat Hk_;  // knot correlation, no jitter
  Cholesky chol_;  // factor of Hk_ + jitter I
};

}  // namespace ssgp
