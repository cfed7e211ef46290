#pragma once

#include <armadillo>
#include <cstdint>
#include <random>

namespace ssgp {

// Owned pseudo-random stream. Independent streams for chains, sites and
// pipeline stages are derived with split(), which depends only on the seed
// the stream was created with, never on how many draws were taken.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng split(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

  double uniform();  // open interval (0, 1)
  double normal();
  arma::vec normal(arma::uword n);

  // Shape-rate parameterization. A shape of exactly zero is the point mass at 0.
  double gamma(double shape, double rate);
  double beta(double a, double b);

  // Wishart with `dof` degrees of freedom and scale matrix `scale` (mean dof * scale),
  // drawn through the Bartlett decomposition.
  arma::mat wishart(double dof, const arma::mat& scale);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ssgp
