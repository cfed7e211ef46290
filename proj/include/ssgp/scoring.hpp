#pragma once

#include <armadillo>
#include <string>

namespace ssgp {

struct ScoreReport {
  std::string model;
  double grs = 0.0;
  double rmse = 0.0;
  arma::uword n_model_runs = 0;
};

// -sum ((z - mu) / sigma)^2 - sum 2 log sigma over all cells. Higher is better.
double grs(const arma::mat& z, const arma::mat& mu_rep, const arma::mat& sigma_rep);

// sqrt of the mean squared error over all cells.
double rmse(const arma::mat& z, const arma::mat& predictions);

}  // namespace ssgp
