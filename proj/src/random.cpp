#include "ssgp/random.hpp"

#include <cmath>

#include "ssgp/errors.hpp"
#include "ssgp/linalg.hpp"

namespace ssgp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return u + 0x1.0p-54;
}

double Rng::normal() { return normal_(engine_); }

arma::vec Rng::normal(arma::uword n) {
  arma::vec out(n);
  for (auto& x : out) x = normal_(engine_);
  return out;
}

double Rng::gamma(double shape, double rate) {
  if (!(shape >= 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw NumericError("gamma draw with invalid parameters shape=" + std::to_string(shape) +
                       " rate=" + std::to_string(rate));
  }
  if (shape == 0.0) return 0.0;
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  if (x + y == 0.0) return uniform() < a / (a + b) ? 1.0 : 0.0;
  return x / (x + y);
}

arma::mat Rng::wishart(double dof, const arma::mat& scale) {
  const arma::uword p = scale.n_rows;
  if (scale.n_cols != p) throw ArgumentError("wishart: scale must be square");
  if (!(dof > static_cast<double>(p) - 1.0)) {
    throw ArgumentError("wishart: degrees of freedom must exceed dimension - 1");
  }
  const arma::mat L = cholesky_lower(scale, "wishart scale");
  arma::mat A(p, p, arma::fill::zeros);
  for (arma::uword i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(2.0 * gamma(0.5 * (dof - static_cast<double>(i)), 1.0));
    for (arma::uword j = 0; j < i; ++j) A(i, j) = normal();
  }
  const arma::mat LA = L * A;
  return LA * LA.t();
}

}  // namespace ssgp
