#include "ssgp/ssm.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

void SsmSpec::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) throw ArgumentError("ssm: omega must lie in (0, 1]");
  if (!(n0 > 0.0) || !(d0 > 0.0)) throw ArgumentError("ssm: n0 and d0 must be positive");
  const arma::uword nq = q();
  if (nq == 0) throw ArgumentError("ssm: empty state");
  if (M0.n_rows != nq || M0.n_cols != nq) throw ArgumentError("ssm: M0 shape mismatch");
  if (V.n_rows != V.n_cols || V.n_rows == 0) throw ArgumentError("ssm: V must be square");
  if (!G.is_empty() && (G.n_rows != nq || G.n_cols != nq)) throw ArgumentError("ssm: G shape mismatch");
  if (state_discount > 0.0) {
    if (state_discount > 1.0) throw ArgumentError("ssm: state discount must lie in (0, 1]");
  } else if (W.n_rows != nq || W.n_cols != nq) {
    throw ArgumentError("ssm: W shape mismatch");
  }
  if (F.size() != y.size()) throw ArgumentError("ssm: F and y lengths differ");
  const arma::uword B = blocks();
  if (nq % B != 0) throw ArgumentError("ssm: state length not divisible by block count");
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t].n_rows != N() || y[t].n_cols != B) throw ArgumentError("ssm: y shape mismatch at t=" + std::to_string(t + 1));
    if (F[t].n_rows != N() || F[t].n_cols != nq / B || F[t].n_slices != B) {
      throw ArgumentError("ssm: F shape mismatch at t=" + std::to_string(t + 1));
    }
  }
}

double student_t_log_predictive(double n_star, double d_star, double k, double log_det_Q, double quad) {
  return std::lgamma(n_star + 0.5 * k) - std::lgamma(n_star) - 0.5 * k * std::log(2.0 * std::numbers::pi * d_star) -
         0.5 * log_det_Q - (n_star + 0.5 * k) * std::log1p(quad / (2.0 * d_star));
}

namespace {

arma::mat apply_G(const arma::mat& G, const arma::mat& X) { return G.is_empty() ? X : mul(G, X); }

arma::mat prior_scale(const SsmSpec& spec, const arma::mat& M) {
  arma::mat GMG = spec.G.is_empty() ? M : mul_bt(mul(spec.G, M), spec.G);
  if (spec.state_discount > 0.0) return symmetrize(GMG / spec.state_discount);
  return symmetrize(GMG + spec.W);
}

}  // namespace

FilterState kalman_filter(const SsmSpec& spec) {
  spec.validate();
  const arma::uword T = spec.T();
  const arma::uword N = spec.N();
  const arma::uword B = spec.blocks();
  const arma::uword nq = spec.q();
  const arma::uword pb = nq / B;
  const arma::uword r = std::min(N, pb);
  const double k_obs = static_cast<double>(N * B);

  FilterState fs;
  fs.a.resize(T + 1);
  fs.m.resize(T + 1);
  fs.A.resize(T + 1);
  fs.M.resize(T + 1);
  fs.q.resize(T + 1);
  if (spec.store_forecast_cov) fs.Q.resize(T + 1);
  fs.n.zeros(T + 1);
  fs.d.zeros(T + 1);
  fs.n_star.zeros(T + 1);
  fs.d_star.zeros(T + 1);
  fs.log_det_Q.zeros(T + 1);
  fs.quad_Q.zeros(T + 1);
  fs.log_predictive.zeros(T + 1);

  fs.a[0] = spec.m0;
  fs.A[0] = spec.M0;
  fs.m[0] = spec.m0;
  fs.M[0] = symmetrize(spec.M0);
  fs.n[0] = fs.n_star[0] = spec.n0;
  fs.d[0] = fs.d_star[0] = spec.d0;
  if (T == 0) return fs;

  const Cholesky cV = factor_spd(spec.V, 0.0, "observation correlation V");

  // R_t is block diagonal with one r x pb block per observation block.
  std::vector<arma::mat> Rb(B);
  arma::vec ytil(r * B);
  for (arma::uword t = 1; t <= T; ++t) {
    const arma::mat& Y = spec.y[t - 1];
    const arma::cube& Ft = spec.F[t - 1];

    // Whiten each block with V, then compress it onto the column space of
    // L^{-1} F_t(b): the pseudo-observations carry unit noise and the residual
    // outside that space only enters d_t.
    double ss_perp = 0.0;
    const arma::mat Fw = cV.whiten(arma::mat(Ft.memptr(), N, pb * B));
    const arma::mat Zw = cV.whiten(Y);
    for (arma::uword b = 0; b < B; ++b) {
      const arma::mat Bm = Fw.cols(b * pb, b * pb + pb - 1);
      const arma::vec z = Zw.col(b);
      if (pb < N) {
        arma::mat Qb;
        if (!arma::qr_econ(Qb, Rb[b], Bm)) throw NumericError("kalman_filter: QR failed at t=" + std::to_string(t));
        const arma::vec zt = Qb.t() * z;
        ss_perp += arma::dot(z, z) - arma::dot(zt, zt);
        ytil.subvec(b * r, b * r + r - 1) = zt;
      } else {
        Rb[b] = Bm;
        ytil.subvec(b * r, b * r + r - 1) = z;
      }
    }
    ss_perp = std::max(ss_perp, 0.0);

    fs.a[t] = apply_G(spec.G, fs.m[t - 1]);
    fs.A[t] = prior_scale(spec, fs.M[t - 1]);
    fs.n_star[t] = spec.omega * fs.n[t - 1];
    fs.d_star[t] = spec.omega * fs.d[t - 1];

    const arma::mat& At = fs.A[t];
    arma::mat RA(r * B, nq);
    arma::vec e(r * B);
    for (arma::uword b = 0; b < B; ++b) {
      RA.rows(b * r, b * r + r - 1) = Rb[b] * At.rows(b * pb, b * pb + pb - 1);
      e.subvec(b * r, b * r + r - 1) =
          ytil.subvec(b * r, b * r + r - 1) - Rb[b] * fs.a[t].subvec(b * pb, b * pb + pb - 1);
    }
    arma::mat Qt(r * B, r * B);
    for (arma::uword b = 0; b < B; ++b) {
      Qt.cols(b * r, b * r + r - 1) = RA.cols(b * pb, b * pb + pb - 1) * Rb[b].t();
    }
    Qt = symmetrize(Qt);
    Qt.diag() += 1.0;
    Cholesky cQ;
    try {
      cQ = factor_spd(Qt, 0.0, "forecast scale Q", 0);
    } catch (const NumericError& err) {
      throw NumericError("kalman_filter: singular Q_t at t=" + std::to_string(t) + ": " + err.what());
    }
    // with Q~ = L L': gain = (L^{-1} R A)' L^{-1}
    const arma::mat Yw = cQ.whiten(RA);
    const arma::vec ew = cQ.whiten(e);
    fs.m[t] = fs.a[t] + Yw.t() * ew;
    fs.M[t] = symmetrize(At - mul_at(Yw, Yw));
    const double quad = arma::dot(ew, ew) + ss_perp;
    fs.n[t] = fs.n_star[t] + 0.5 * k_obs;
    fs.d[t] = fs.d_star[t] + 0.5 * quad;
    fs.quad_Q[t] = quad;
    fs.log_det_Q[t] = static_cast<double>(B) * cV.log_det + cQ.log_det;
    fs.log_predictive[t] = student_t_log_predictive(fs.n_star[t], fs.d_star[t], k_obs, fs.log_det_Q[t], quad);

    arma::vec qt(N * B);
    for (arma::uword b = 0; b < B; ++b) {
      qt.subvec(b * N, b * N + N - 1) = Ft.slice(b) * fs.a[t].subvec(b * pb, b * pb + pb - 1);
    }
    fs.q[t] = std::move(qt);
    if (spec.store_forecast_cov) {
      arma::mat Fd(N * B, nq, arma::fill::zeros);
      for (arma::uword b = 0; b < B; ++b) Fd.submat(b * N, b * pb, b * N + N - 1, b * pb + pb - 1) = Ft.slice(b);
      fs.Q[t] = symmetrize(Fd * fs.A[t] * Fd.t() + arma::kron(arma::eye(B, B), spec.V));
    }
    if (!fs.m[t].is_finite() || !fs.M[t].is_finite() || !std::isfinite(fs.d[t])) {
      throw NumericError("kalman_filter: non-finite filter moments at t=" + std::to_string(t));
    }
  }
  return fs;
}

double shifted_gamma_precision(double n_t, double d_t, double omega, double next_precision, Rng& rng) {
  const double shape = (1.0 - omega) * n_t;
  return omega * next_precision + (shape > 0.0 ? rng.gamma(shape, d_t) : 0.0);
}

arma::vec backward_precision(const arma::vec& n, const arma::vec& d, double omega, Rng& rng) {
  const arma::uword T = n.n_elem - 1;
  arma::vec prec(T + 1);
  prec[T] = rng.gamma(n[T], d[T]);
  for (arma::uword i = T; i-- > 0;) {
    prec[i] = shifted_gamma_precision(n[i], d[i], omega, prec[i + 1], rng);
  }
  for (double x : prec) {
    if (!(x > 0.0) || !std::isfinite(x)) throw NumericError("backward_precision: non-positive precision draw");
  }
  return 1.0 / prec;
}

StateDraw backward_sample(const FilterState& fs, const SsmSpec& spec, Rng& rng, Smoother smoother) {
  const arma::uword T = fs.T();
  const arma::uword nq = spec.q();
  for (arma::uword t = 0; t <= T; ++t) {
    if (!fs.m[t].is_finite() || !fs.M[t].is_finite() || !(fs.n[t] > 0.0) || !(fs.d[t] > 0.0)) {
      throw NumericError("backward_sample: invalid filter moments at t=" + std::to_string(t));
    }
  }
  StateDraw out;
  out.v = backward_precision(fs.n, fs.d, spec.omega, rng);
  out.theta.set_size(nq, T + 1);
  out.theta.col(T) = draw_mvn(fs.m[T], fs.M[T], out.v[T], rng);

  arma::vec s_next = fs.m[T];
  arma::mat S_next = fs.M[T];
  for (arma::uword t = T; t-- > 0;) {
    const arma::mat GM = apply_G(spec.G, fs.M[t]);  // G M_t
    if (smoother == Smoother::Conditional) {
      // B = M_t G' A^{-1}; with A = L L' and Z = L^{-1} G M_t, B x = Z' L^{-1} x and B G M_t = Z' Z
      const Cholesky cA = factor_spd(fs.A[t + 1], 0.0, "prior scale A", 3);
      const arma::mat Z = cA.whiten(GM);
      const arma::vec h = fs.m[t] + Z.t() * cA.whiten(arma::vec(out.theta.col(t + 1) - fs.a[t + 1]));
      const arma::mat H = symmetrize(fs.M[t] - mul_at(Z, Z));
      out.theta.col(t) = draw_mvn(h, H, out.v[t], rng);
    } else {
      const arma::mat BtT = spd_solve(fs.A[t + 1], GM);  // (M_t G' A_{t+1}^{-1})'
      const arma::mat Bt = BtT.t();
      const arma::vec s = fs.m[t] + Bt * (s_next - fs.a[t + 1]);
      const arma::mat S = symmetrize(fs.M[t] - mul(Bt, mul(arma::mat(fs.A[t + 1] - S_next), BtT)));
      out.theta.col(t) = draw_mvn(s, S, out.v[t], rng);
      s_next = s;
      S_next = S;
    }
  }
  return out;
}

StateDraw ffbs(const SsmSpec& spec, Rng& rng, Smoother smoother) {
  const FilterState fs = kalman_filter(spec);
  return backward_sample(fs, spec, rng, smoother);
}

arma::vec sample_discount_variance(const arma::mat& residuals, double discount, double n0, double d0,
                                   Rng& rng) {
  if (!(discount > 0.0 && discount <= 1.0)) throw ArgumentError("discount must lie in (0, 1]");
  const arma::uword T = residuals.n_cols;
  arma::vec n(T + 1), d(T + 1);
  n[0] = n0;
  d[0] = d0;
  const double k = static_cast<double>(residuals.n_rows);
  for (arma::uword t = 1; t <= T; ++t) {
    n[t] = discount * n[t - 1] + 0.5 * k;
    d[t] = discount * d[t - 1] + 0.5 * arma::dot(residuals.col(t - 1), residuals.col(t - 1));
  }
  return backward_precision(n, d, discount, rng);
}

}  // namespace ssgp
