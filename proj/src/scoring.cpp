#include "ssgp/scoring.hpp"

#include <cmath>

#include "ssgp/errors.hpp"

namespace ssgp {

double grs(const arma::mat& z, const arma::mat& mu_rep, const arma::mat& sigma_rep) {
  if (arma::size(z) != arma::size(mu_rep) || arma::size(z) != arma::size(sigma_rep)) {
    throw ArgumentError("grs: shape mismatch");
  }
  double out = 0.0;
  for (arma::uword i = 0; i < z.n_elem; ++i) {
    const double s = sigma_rep[i];
    if (!(s > 0.0)) throw ArgumentError("grs: sigma_rep must be positive everywhere");
    const double r = (z[i] - mu_rep[i]) / s;
    out -= r * r + 2.0 * std::log(s);
  }
  return out;
}

double rmse(const arma::mat& z, const arma::mat& predictions) {
  if (z.n_rows != predictions.n_rows || z.n_cols != predictions.n_cols) throw ArgumentError("rmse: shape mismatch");
  if (z.is_empty()) throw ArgumentError("rmse: no cells");
  double ss = 0.0;
  for (arma::uword i = 0; i < z.n_elem; ++i) {
    const double e = z[i] - predictions[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(z.n_elem));
}

}  // namespace ssgp
