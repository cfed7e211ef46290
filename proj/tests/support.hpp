#pragma once

#include <armadillo>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testing {

// One-sample Kolmogorov-Smirnov statistic of `x` against `cdf`.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  return D;
}

// Asymptotic Kolmogorov tail probability with Stephens' small-sample correction.
inline double ks_pvalue(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double max_abs(const arma::mat& A) { return A.is_empty() ? 0.0 : arma::abs(A).max(); }
inline arma::mat scalar_mat(double x) { return arma::mat(1, 1, arma::fill::value(x)); }

// Gaussian N(mu, Sigma) over a stacked vector; conditions on the coordinates in
// `obs` taking the values `y`.
struct GaussCond {
  arma::vec mean;
  arma::mat cov;
};

inline GaussCond condition(const arma::vec& mu, const arma::mat& Sigma, const arma::uvec& obs, const arma::vec& y) {
  arma::uvec all = arma::regspace<arma::uvec>(0, mu.n_elem - 1);
  std::vector<arma::uword> rest;
  for (arma::uword i : all) {
    if (!arma::any(obs == i)) rest.push_back(i);
  }
  const arma::uvec h(rest);
  if (obs.is_empty()) return {mu.elem(h), Sigma.submat(h, h)};
  const arma::mat Soo = Sigma.submat(obs, obs);
  const arma::mat Sho = Sigma.submat(h, obs);
  const arma::mat G = Sho * arma::inv_sympd(Soo);
  GaussCond out;
  out.mean = mu.elem(h) + G * (y - mu.elem(obs));
  out.cov = Sigma.submat(h, h) - G * Sho.t();
  return out;
}

}  // namespace testing
