#include "ssgp/design.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

namespace {

void check_bounds(const arma::vec& lo, const arma::vec& hi, arma::uword d) {
  if (lo.n_elem != d || hi.n_elem != d) throw ArgumentError("design: bounds have the wrong length");
  if (!lo.is_finite() || !hi.is_finite() || arma::any(hi <= lo)) {
    throw ArgumentError("design: bounds need lo < hi in every dimension");
  }
}

}  // namespace

arma::mat DesignSet::raw() const {
  check_bounds(lo, hi, U.n_cols);
  arma::mat out = U;
  for (arma::uword c = 0; c < U.n_cols; ++c) out.col(c) = lo[c] + U.col(c) * (hi[c] - lo[c]);
  return out;
}

DesignSet latin_hypercube(arma::uword N, arma::uword d, std::uint64_t seed, bool midpoint) {
  if (N < 1 || d < 1) throw ArgumentError("latin_hypercube: need N >= 1 and d >= 1");
  Rng rng(seed);
  DesignSet out;
  out.seed = seed;
  out.U.set_size(N, d);
  out.lo.zeros(d);
  out.hi.ones(d);
  std::vector<arma::uword> perm(N);
  for (arma::uword c = 0; c < d; ++c) {
    std::iota(perm.begin(), perm.end(), arma::uword{0});
    // Fisher-Yates on our own uniforms so designs do not depend on the standard library
    for (arma::uword i = N; i > 1; --i) {
      const auto j = static_cast<arma::uword>(rng.uniform() * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    for (arma::uword i = 0; i < N; ++i) {
      const double u = midpoint ? 0.5 : rng.uniform();
      out.U(i, c) = (static_cast<double>(perm[i]) + u) / static_cast<double>(N);
    }
  }
  return out;
}

arma::vec to_unit(const arma::vec& raw, const arma::vec& lo, const arma::vec& hi) {
  check_bounds(lo, hi, raw.n_elem);
  return (raw - lo) / (hi - lo);
}

arma::vec to_raw(const arma::vec& unit, const arma::vec& lo, const arma::vec& hi) {
  check_bounds(lo, hi, unit.n_elem);
  return lo + unit % (hi - lo);
}

}  // namespace ssgp
