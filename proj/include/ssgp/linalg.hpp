#pragma once

#include <armadillo>
#include <string>

namespace ssgp {

class Rng;

// Diagonal regularization added to correlation matrices before factorization.
inline constexpr double kJitter = 1e-8;

// Lower Cholesky factor of an SPD matrix, with the jitter that was needed to get it.
struct Cholesky {
  arma::mat lower;
  double jitter = 0.0;
  double log_det = 0.0;

  arma::uword dim() const { return lower.n_rows; }
  arma::vec solve(const arma::vec& b) const;
  arma::mat solve(const arma::mat& b) const;
  // x' A^{-1} x
  double quad_form(const arma::vec& x) const;
  // L^{-1} b
  arma::mat whiten(const arma::mat& b) const;
};

// Factors A + jitter*I, starting from `base_jitter` and escalating tenfold on
// failure up to `escalations` times. Throws NumericError with conditioning
// diagnostics when that fails. `what` names the matrix in error messages.
Cholesky factor_spd(const arma::mat& A, double base_jitter, const std::string& what,
                    int escalations = 5);

// Plain Cholesky (lower) with no regularization; throws NumericError on failure.
arma::mat cholesky_lower(const arma::mat& A, const std::string& what);

arma::mat symmetrize(const arma::mat& A);

// Solves A X = B for symmetric positive (semi)definite A; falls back to a
// pseudo-inverse when the Cholesky factorization fails.
arma::mat spd_solve(const arma::mat& A, const arma::mat& B);

// Draws from N(mean, scale * cov). Tolerates positive semidefinite and
// slightly indefinite (round-off) covariances by clamping eigenvalues at zero.
arma::vec draw_mvn(const arma::vec& mean, const arma::mat& cov, double scale, Rng& rng);

// Dense products computed with vectorized kernels; A * B, A * B' and A' * B.
arma::mat mul(const arma::mat& A, const arma::mat& B);
arma::mat mul_bt(const arma::mat& A, const arma::mat& B);
arma::mat mul_at(const arma::mat& A, const arma::mat& B);

// log N(x | 0, scale * A) where `chol` factors A.
double log_mvn_zero_mean(const arma::vec& x, const Cholesky& chol, double scale);

}  // namespace ssgp
