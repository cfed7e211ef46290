#include "ssgp/kernels.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

void check_positive(const arma::vec& x, const std::string& what) {
  for (double v : x) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << what << " must be positive and finite, got " << v;
      throw ArgumentError(os.str());
    }
  }
}

double sq_exp_corr(const arma::vec& x, const arma::vec& x_prime, const arma::vec& beta) {
  if (x.n_elem != x_prime.n_elem || x.n_elem != beta.n_elem) {
    throw ArgumentError("sq_exp_corr: dimension mismatch");
  }
  double s = 0.0;
  for (arma::uword i = 0; i < x.n_elem; ++i) {
    const double diff = x[i] - x_prime[i];
    s += beta[i] * diff * diff;
  }
  return std::exp(-s);
}

arma::mat cross_corr(const arma::mat& X, const arma::mat& Z, const arma::vec& beta) {
  if (X.n_cols != beta.n_elem || Z.n_cols != beta.n_elem) {
    throw ArgumentError("cross_corr: dimension mismatch");
  }
  arma::mat out(X.n_rows, Z.n_rows);
  for (arma::uword j = 0; j < Z.n_rows; ++j) {
    for (arma::uword i = 0; i < X.n_rows; ++i) {
      double s = 0.0;
      for (arma::uword k = 0; k < beta.n_elem; ++k) {
        const double diff = X(i, k) - Z(j, k);
        s += beta[k] * diff * diff;
      }
      out(i, j) = std::exp(-s);
    }
  }
  return out;
}

arma::mat corr_matrix(const arma::mat& X, const arma::vec& beta) {
  if (X.n_rows == 0) throw ArgumentError("corr_matrix: need at least one input");
  if (X.n_cols != beta.n_elem) throw ArgumentError("corr_matrix: dimension mismatch");
  const arma::uword n = X.n_rows;
  arma::mat C(n, n);
  for (arma::uword j = 0; j < n; ++j) {
    C(j, j) = 1.0;
    for (arma::uword i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (arma::uword k = 0; k < beta.n_elem; ++k) {
        const double diff = X(i, k) - X(j, k);
        s += beta[k] * diff * diff;
      }
      C(i, j) = C(j, i) = std::exp(-s);
    }
  }
  return C;
}

arma::mat corr_from_cov(const arma::mat& T) {
  if (T.n_rows != T.n_cols) throw ArgumentError("corr_from_cov: matrix is not square");
  const arma::vec sd = arma::sqrt(T.diag());
  for (double s : sd) {
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericError("corr_from_cov: non-positive diagonal entry");
  }
  arma::mat R = T.each_col() / sd;
  R.each_row() /= sd.t();
  R = symmetrize(R);
  R.diag().ones();
  return R;
}

arma::mat network_corr(const arma::mat& adjacency) {
  if (adjacency.n_rows != adjacency.n_cols) throw ArgumentError("network_corr: adjacency is not square");
  if (!adjacency.is_symmetric()) throw ArgumentError("network_corr: adjacency is not symmetric");
  const double deg_max = arma::max(arma::sum(adjacency, 1));
  arma::mat H = arma::eye(adjacency.n_rows, adjacency.n_cols);
  if (deg_max > 0.0) H += adjacency / deg_max;
  H.diag().ones();
  return H;
}

KroneckerCorr::KroneckerCorr(arma::mat H, arma::mat T)
    : H_(std::move(H)),
      T_(std::move(T)),
      cH_(factor_spd(H_, 0.0, "spatial correlation H", 0)),
      cT_(factor_spd(T_, 0.0, "cross-covariance T", 0)) {}

double KroneckerCorr::log_det() const {
  return static_cast<double>(p()) * cH_.log_det + static_cast<double>(S()) * cT_.log_det;
}

double KroneckerCorr::quad_form(const arma::mat& X) const {
  if (X.n_rows != p() || X.n_cols != S()) throw ArgumentError("KroneckerCorr: shape mismatch");
  // tr(T^{-1} X H^{-1} X') = ||L_T^{-1} X L_H^{-T}||_F^2
  const arma::mat A = cT_.whiten(X);
  const arma::mat B = cH_.whiten(A.t());
  return arma::accu(arma::square(B));
}

double KroneckerCorr::quad_form(const arma::vec& u) const {
  if (u.n_elem != p() * S()) throw ArgumentError("KroneckerCorr: shape mismatch");
  return quad_form(arma::mat(arma::reshape(u, p(), S())));
}

arma::vec KroneckerCorr::solve(const arma::vec& u) const {
  if (u.n_elem != p() * S()) throw ArgumentError("KroneckerCorr: shape mismatch");
  const arma::mat X = arma::reshape(u, p(), S());
  const arma::mat Y = cH_.solve(arma::mat(cT_.solve(X).t())).t();
  return arma::vectorise(Y);
}

arma::mat KroneckerCorr::dense() const { return arma::kron(H_, T_); }

arma::mat KroneckerCorr::dense_inverse() const {
  return arma::kron(cH_.solve(arma::mat(arma::eye(S(), S()))), cT_.solve(arma::mat(arma::eye(p(), p()))));
}

KroneckerCorr kron_corr(const arma::mat& locations, const arma::vec& omega_sp, const arma::mat& T,
                        double jitter) {
  if (locations.n_rows == 0) throw ArgumentError("kron_corr: no locations");
  check_positive(omega_sp, "spatial range");
  arma::mat H = corr_matrix(locations, omega_sp);
  H.diag() += jitter;
  return KroneckerCorr(std::move(H), T);
}

namespace {

arma::uword nearest_row(const arma::mat& locations, const arma::rowvec& point) {
  const arma::mat diff = locations.each_row() - point;
  return arma::index_min(arma::sum(arma::square(diff), 1));
}

bool same_point(const arma::mat& A, arma::uword i, const arma::vec& s) {
  for (arma::uword k = 0; k < s.n_elem; ++k) {
    if (A(i, k) != s[k]) return false;
  }
  return true;
}

}  // namespace

KnotSet grid_knots(const arma::mat& locations, arma::uword per_dim) {
  if (locations.n_rows == 0 || per_dim == 0) throw ArgumentError("grid_knots: empty input");
  const arma::uword dim = locations.n_cols;
  const arma::rowvec lo = arma::min(locations, 0);
  const arma::rowvec hi = arma::max(locations, 0);
  arma::uword total = 1;
  for (arma::uword k = 0; k < dim; ++k) total *= per_dim;
  std::set<arma::uword> chosen;
  std::vector<arma::uword> order;
  for (arma::uword idx = 0; idx < total; ++idx) {
    arma::rowvec point(dim);
    arma::uword rem = idx;
    for (arma::uword k = 0; k < dim; ++k) {
      const arma::uword g = rem % per_dim;
      rem /= per_dim;
      const double frac = per_dim == 1 ? 0.5 : static_cast<double>(g) / static_cast<double>(per_dim - 1);
      point[k] = lo[k] + frac * (hi[k] - lo[k]);
    }
    const arma::uword row = nearest_row(locations, point);
    if (chosen.insert(row).second) order.push_back(row);
  }
  KnotSet out;
  out.placement = "grid";
  out.knots = locations.rows(arma::uvec(order));
  return out;
}

KnotSet random_knots(const arma::mat& locations, arma::uword count, Rng& rng) {
  if (count == 0 || count > locations.n_rows) throw ArgumentError("random_knots: need 1 <= count <= S");
  std::vector<arma::uword> idx(locations.n_rows);
  for (arma::uword i = 0; i < idx.size(); ++i) idx[i] = i;
  for (arma::uword i = 0; i < count; ++i) {
    const auto j = i + static_cast<arma::uword>(rng.uniform() * static_cast<double>(idx.size() - i));
    std::swap(idx[i], idx[std::min<arma::uword>(j, idx.size() - 1)]);
  }
  idx.resize(count);
  KnotSet out;
  out.placement = "random";
  out.knots = locations.rows(arma::uvec(idx));
  return out;
}

PredictiveProcess::PredictiveProcess(arma::mat knots, const arma::vec& omega_sp, arma::mat T,
                                     double jitter)
    : knots_(std::move(knots)), omega_(omega_sp), T_(std::move(T)) {
  if (knots_.n_rows == 0) throw ArgumentError("PredictiveProcess: empty knot set");
  check_positive(omega_, "spatial range");
  Hk_ = corr_matrix(knots_, omega_);
  arma::mat Hj = Hk_;
  Hj.diag() += jitter;
  chol_ = factor_spd(Hj, 0.0, "knot correlation K*", 0);
}

arma::vec PredictiveProcess::weights(const arma::vec& s) const {
  if (s.n_elem != knots_.n_cols) throw ArgumentError("PredictiveProcess: dimension mismatch");
  for (arma::uword j = 0; j < knots_.n_rows; ++j) {
    if (same_point(knots_, j, s)) {
      arma::vec e(knots_.n_rows, arma::fill::zeros);
      e[j] = 1.0;
      return e;
    }
  }
  const arma::vec c = cross_corr(knots_, s.t(), omega_).col(0);
  return chol_.solve(c);
}

double PredictiveProcess::low_rank(const arma::vec& s, const arma::vec& s_prime) const {
  return arma::as_scalar(weights(s).t() * Hk_ * weights(s_prime));
}

double PredictiveProcess::delta(const arma::vec& s) const {
  const arma::vec w = weights(s);
  return std::max(0.0, 1.0 - arma::as_scalar(w.t() * Hk_ * w));
}

arma::mat PredictiveProcess::block(const arma::vec& s, const arma::vec& s_prime) const {
  const arma::vec w = weights(s);
  const arma::vec wp = weights(s_prime);
  arma::mat out = arma::as_scalar(w.t() * Hk_ * wp) * T_;
  if (arma::approx_equal(s, s_prime, "absdiff", 0.0)) {
    const double dl = std::max(0.0, 1.0 - arma::as_scalar(w.t() * Hk_ * w));
    out.diag() += dl * T_.diag();
  }
  return out;
}

arma::vec PredictiveProcess::deltas(const arma::mat& locations) const {
  arma::vec out(locations.n_rows);
  for (arma::uword i = 0; i < locations.n_rows; ++i) out[i] = delta(locations.row(i).t());
  return out;
}

arma::mat PredictiveProcess::low_rank_corr(const arma::mat& locations) const {
  arma::mat Wt(knots_.n_rows, locations.n_rows);
  for (arma::uword i = 0; i < locations.n_rows; ++i) Wt.col(i) = weights(locations.row(i).t());
  return symmetrize(Wt.t() * Hk_ * Wt);
}

arma::mat PredictiveProcess::location_corr(const arma::mat& locations) const {
  arma::mat C = low_rank_corr(locations);
  for (arma::uword i = 0; i < locations.n_rows; ++i) C(i, i) += std::max(0.0, 1.0 - C(i, i));
  return C;
}

}  // namespace ssgp
