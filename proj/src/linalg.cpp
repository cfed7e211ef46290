#include "ssgp/linalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

namespace {

using EMat = Eigen::MatrixXd;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap view(const arma::mat& A) { return CMap(A.memptr(), A.n_rows, A.n_cols); }
MMap view(arma::mat& A) { return MMap(A.memptr(), A.n_rows, A.n_cols); }

std::string diagnostics(const arma::mat& A) {
  std::ostringstream os;
  os << "dim=" << A.n_rows;
  if (A.n_rows > 0 && A.is_finite()) {
    arma::vec eig;
    if (arma::eig_sym(eig, symmetrize(A))) {
      os << " min_eig=" << eig.min() << " max_eig=" << eig.max();
      if (eig.min() > 0) os << " cond=" << eig.max() / eig.min();
    }
    os << " min_diag=" << A.diag().min();
  } else {
    os << " (non-finite entries)";
  }
  return os.str();
}

// Lower Cholesky factor of A + shift I; false when A is not numerically SPD.
bool llt_lower(const arma::mat& A, double shift, arma::mat& L) {
  EMat B = view(A);
  if (shift != 0.0) B.diagonal().array() += shift;
  Eigen::LLT<EMat, Eigen::Lower> llt(B);
  if (llt.info() != Eigen::Success) return false;
  L.set_size(A.n_rows, A.n_cols);
  view(L) = llt.matrixL();
  return L.is_finite();
}

}  // namespace

arma::mat mul(const arma::mat& A, const arma::mat& B) {
  if (A.n_cols != B.n_rows) throw ArgumentError("mul: inner dimensions differ");
  arma::mat C(A.n_rows, B.n_cols);
  view(C).noalias() = view(A) * view(B);
  return C;
}

arma::mat mul_bt(const arma::mat& A, const arma::mat& B) {
  if (A.n_cols != B.n_cols) throw ArgumentError("mul_bt: inner dimensions differ");
  arma::mat C(A.n_rows, B.n_rows);
  view(C).noalias() = view(A) * view(B).transpose();
  return C;
}

arma::mat mul_at(const arma::mat& A, const arma::mat& B) {
  if (A.n_rows != B.n_rows) throw ArgumentError("mul_at: inner dimensions differ");
  arma::mat C(A.n_cols, B.n_cols);
  view(C).noalias() = view(A).transpose() * view(B);
  return C;
}

arma::vec Cholesky::solve(const arma::vec& b) const { return arma::vec(solve(arma::mat(b))); }

arma::mat Cholesky::solve(const arma::mat& b) const {
  if (b.n_rows != lower.n_rows) throw ArgumentError("Cholesky::solve: dimension mismatch");
  arma::mat x = b;
  const auto L = view(lower).triangularView<Eigen::Lower>();
  L.solveInPlace(view(x));
  L.transpose().solveInPlace(view(x));
  return x;
}

arma::mat Cholesky::whiten(const arma::mat& b) const {
  if (b.n_rows != lower.n_rows) throw ArgumentError("Cholesky::whiten: dimension mismatch");
  arma::mat x = b;
  view(lower).triangularView<Eigen::Lower>().solveInPlace(view(x));
  return x;
}

double Cholesky::quad_form(const arma::vec& x) const {
  const arma::mat y = whiten(x);
  return arma::accu(arma::square(y));
}

Cholesky factor_spd(const arma::mat& A, double base_jitter, const std::string& what,
                    int escalations) {
  if (A.n_rows != A.n_cols) throw ArgumentError(what + ": matrix is not square");
  if (!A.is_finite()) throw NumericError(what + ": non-finite entries; " + diagnostics(A));
  Cholesky out;
  const double scale = std::max(1.0, arma::mean(arma::abs(A.diag())));
  double jitter = base_jitter;
  for (int attempt = 0; attempt <= escalations; ++attempt) {
    arma::mat L;
    if (llt_lower(A, jitter * scale, L)) {
      out.lower = std::move(L);
      out.jitter = jitter * scale;
      out.log_det = 2.0 * arma::accu(arma::log(out.lower.diag()));
      return out;
    }
    jitter = jitter > 0.0 ? jitter * 10.0 : 1e-12;
  }
  std::ostringstream os;
  os << what << ": Cholesky factorization failed (jitter up to " << (jitter / 10.0) * scale << "); "
     << diagnostics(A);
  throw NumericError(os.str());
}

arma::mat cholesky_lower(const arma::mat& A, const std::string& what) {
  arma::mat L;
  if (A.n_rows != A.n_cols || !A.is_finite() || !llt_lower(A, 0.0, L)) {
    throw NumericError(what + ": Cholesky factorization failed; " + diagnostics(A));
  }
  return L;
}

arma::mat symmetrize(const arma::mat& A) { return 0.5 * (A + A.t()); }

arma::mat spd_solve(const arma::mat& A, const arma::mat& B) {
  arma::mat L;
  if (A.is_finite() && llt_lower(A, 0.0, L)) {
    Cholesky c;
    c.lower = std::move(L);
    return c.solve(B);
  }
  return arma::pinv(symmetrize(A)) * B;
}

arma::vec draw_mvn(const arma::vec& mean, const arma::mat& cov, double scale, Rng& rng) {
  const arma::vec z = rng.normal(mean.n_elem);
  const double s = std::sqrt(scale);
  arma::mat L;
  if (cov.is_finite() && llt_lower(cov, 0.0, L)) return mean + s * (L * z);
  arma::vec eval;
  arma::mat evec;
  if (!arma::eig_sym(eval, evec, symmetrize(cov))) {
    throw NumericError("draw_mvn: eigendecomposition failed; " + diagnostics(cov));
  }
  eval.transform([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
  return mean + s * (evec * (eval % z));
}

double log_mvn_zero_mean(const arma::vec& x, const Cholesky& chol, double scale) {
  const double n = static_cast<double>(x.n_elem);
  return -0.5 * (n * std::log(2.0 * std::numbers::pi * scale) + chol.log_det + chol.quad_form(x) / scale);
}

}  // namespace ssgp
