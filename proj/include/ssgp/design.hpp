#pragma once

#include <armadillo>
#include <cstdint>

namespace ssgp {

struct DesignSet {
  arma::mat U;   // N x d in [0, 1]
  arma::vec lo;  // raw-scale bounds per dimension
  arma::vec hi;
  std::uint64_t seed = 0;

  // lo + U (hi - lo), row per run.
  arma::mat raw() const;
};

// Column c is (pi_c(0..N-1) + u) / N with an independent permutation pi_c and
// uniform jitter u, or u = 1/2 with `midpoint`.
DesignSet latin_hypercube(arma::uword N, arma::uword d, std::uint64_t seed, bool midpoint = false);

arma::vec to_unit(const arma::vec& raw, const arma::vec& lo, const arma::vec& hi);
arma::vec to_raw(const arma::vec& unit, const arma::vec& lo, const arma::vec& hi);

}  // namespace ssgp
