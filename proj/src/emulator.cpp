#include "ssgp/emulator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ssgp/errors.hpp"
#include "ssgp/parallel.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

arma::mat Domain::corr(const arma::vec& range) const {
  if (is_network()) return network_corr(adjacency);
  return corr_matrix(coords, range);
}

Domain Domain::subset(const arma::uvec& idx) const {
  Domain out;
  if (is_network()) {
    out.adjacency = adjacency.submat(idx, idx);
  } else {
    out.coords = coords.rows(idx);
  }
  return out;
}

void Ensemble::validate() const {
  if (N() < 2) throw ArgumentError("ensemble: need at least two runs");
  if (p < 1) throw ArgumentError("ensemble: lag order must be at least 1");
  if (T() <= p) throw ArgumentError("ensemble: need more than p time points");
  if (X.n_rows != N()) throw ArgumentError("ensemble: design rows do not match runs");
  if (domain.size() != S()) throw ArgumentError("ensemble: domain size does not match locations");
  if (!Y.is_finite()) throw ArgumentError("ensemble: outputs contain non-finite values");
}

arma::mat build_ar_design(const arma::cube& Y, arma::uword t, arma::uword j, arma::uword p) {
  if (t < p || t >= Y.n_slices) throw ArgumentError("build_ar_design: time index leaves no room for p lags");
  if (j >= Y.n_cols) throw ArgumentError("build_ar_design: location out of range");
  arma::mat F(Y.n_rows, p);
  for (arma::uword l = 0; l < p; ++l) F.col(l) = Y.slice(t - 1 - l).col(j);
  return F;
}

OutputTransform OutputTransform::fit(const arma::cube& Y, bool per_location, double floor) {
  OutputTransform tr;
  const arma::uword S = Y.n_cols;
  tr.center.set_size(S);
  tr.scale.set_size(S);
  double global_sd = 0.0;
  {
    const arma::vec all = arma::vectorise(Y);
    global_sd = all.n_elem > 1 ? arma::stddev(all) : 1.0;
  }
  const double global_mean = arma::mean(arma::vectorise(Y));
  for (arma::uword s = 0; s < S; ++s) {
    arma::vec vals(Y.n_rows * Y.n_slices);
    arma::uword k = 0;
    for (arma::uword t = 0; t < Y.n_slices; ++t)
      for (arma::uword i = 0; i < Y.n_rows; ++i) vals[k++] = Y(i, s, t);
    if (per_location) {
      tr.center[s] = arma::mean(vals);
      const double sd = vals.n_elem > 1 ? arma::stddev(vals) : 1.0;
      tr.scale[s] = std::max({sd, floor, 1e-3 * global_sd});
    } else {
      tr.center[s] = global_mean;
      tr.scale[s] = std::max(global_sd, floor);
    }
  }
  return tr;
}

arma::cube OutputTransform::apply(const arma::cube& Y) const {
  arma::cube out = Y;
  for (arma::uword t = 0; t < Y.n_slices; ++t)
    for (arma::uword s = 0; s < Y.n_cols; ++s) out.slice(t).col(s) = (Y.slice(t).col(s) - center[s]) / scale[s];
  return out;
}

arma::mat OutputTransform::apply(const arma::mat& Z) const {
  arma::mat out = Z.each_col() - center;
  out.each_col() /= scale;
  return out;
}

arma::mat OutputTransform::invert_mean(const arma::mat& Z) const {
  arma::mat out = Z.each_col() % scale;
  out.each_col() += center;
  return out;
}

arma::mat OutputTransform::invert_sd(const arma::mat& Z) const { return Z.each_col() % scale; }

std::string to_string(EmulatorMode mode) {
  switch (mode) {
    case EmulatorMode::Spatial: return "spatial";
    case EmulatorMode::Heterogeneous: return "heterogeneous";
    case EmulatorMode::PredictiveProcess: return "predictive_process";
  }
  return "spatial";
}

EmulatorMode parse_mode(const std::string& s) {
  if (s == "spatial") return EmulatorMode::Spatial;
  if (s == "heterogeneous") return EmulatorMode::Heterogeneous;
  if (s == "predictive_process") return EmulatorMode::PredictiveProcess;
  throw ArgumentError("unknown emulator mode '" + s + "'");
}

int EmulatorConfig::n_retained() const {
  return n_samples <= burn_in ? 0 : (n_samples - burn_in) / thin;
}

void EmulatorConfig::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) throw ArgumentError("emulator: omega must lie in (0, 1]");
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw ArgumentError("emulator: step sizes must be positive");
  if (n_samples <= burn_in || burn_in < 0) throw ArgumentError("emulator: n_samples must exceed burn_in");
  if (thin < 1) throw ArgumentError("emulator: thin must be at least 1");
  if (n_retained() < 1) throw ArgumentError("emulator: no samples would be retained");
  if (!(het_discount > 0.0 && het_discount <= 1.0)) throw ArgumentError("emulator: het discount must lie in (0, 1]");
  if (!(n0 > 0.0) || !(d0 > 0.0) || !(M0_scale > 0.0)) throw ArgumentError("emulator: invalid Normal-Gamma prior");
  if (!(prior.sd > 0.0)) throw ArgumentError("emulator: prior sd must be positive");
}

arma::mat StateCorr::dense(double jitter) const {
  arma::mat Cj = C;
  Cj.diag() += jitter;
  arma::mat W = arma::kron(Cj, hT);
  if (arma::any(delta > 0.0)) W += arma::kron(arma::diagmat(delta), arma::diagmat(hT.diag()));
  return symmetrize(W);
}

double StateCorr::log_density(const std::vector<arma::mat>& X, const arma::vec& v, double jitter) const {
  const arma::uword p = hT.n_rows;
  const arma::uword S = C.n_rows;
  const double q = static_cast<double>(p * S);
  const bool kron_form = !arma::any(delta > 0.0) || hT.is_diagmat();
  double log_det = 0.0;
  double out = 0.0;
  if (kron_form) {
    arma::mat H = C;
    H.diag() += jitter + delta;
    const KroneckerCorr W(std::move(H), hT);
    log_det = W.log_det();
    for (std::size_t k = 0; k < X.size(); ++k) {
      out += -0.5 * (q * std::log(2.0 * std::numbers::pi * v[k + 1]) + log_det + W.quad_form(X[k]) / v[k + 1]);
    }
  } else {
    const Cholesky cW = factor_spd(dense(jitter), 0.0, "state correlation W", 0);
    for (std::size_t k = 0; k < X.size(); ++k) {
      out += -0.5 * (q * std::log(2.0 * std::numbers::pi * v[k + 1]) + cW.log_det +
                     cW.quad_form(arma::vectorise(X[k])) / v[k + 1]);
    }
  }
  return out;
}

StateCorr state_corr(EmulatorMode mode, const Domain& domain, const KnotSet& knots, const arma::vec& range,
                     const arma::mat& hT) {
  StateCorr sc;
  sc.hT = hT;
  sc.delta.zeros(domain.size());
  if (mode == EmulatorMode::PredictiveProcess && !domain.is_network()) {
    const PredictiveProcess pp(knots.knots, range, hT);
    sc.C = pp.low_rank_corr(domain.coords);
    sc.delta = pp.deltas(domain.coords);
  } else {
    sc.C = domain.corr(range);
  }
  return sc;
}

namespace {

struct PartData {
  arma::uword N = 0, S = 0, p = 0, K = 0;
  std::vector<arma::mat> y;   // N x S
  std::vector<arma::cube> F;  // N x p x S
};

PartData make_part_data(const Ensemble& ens) {
  PartData pd;
  pd.N = ens.N();
  pd.S = ens.S();
  pd.p = ens.p;
  pd.K = ens.K();
  pd.y.resize(pd.K);
  pd.F.resize(pd.K);
  for (arma::uword k = 1; k <= pd.K; ++k) {
    const arma::uword t = ens.p + k - 1;
    pd.y[k - 1] = ens.Y.slice(t);
    arma::cube F(pd.N, pd.p, pd.S);
    for (arma::uword s = 0; s < pd.S; ++s) F.slice(s) = build_ar_design(ens.Y, t, s, ens.p);
    pd.F[k - 1] = std::move(F);
  }
  return pd;
}

// Residuals y_k(s) - F_k(s) theta_k(s), scaled by 1/sqrt(v_k), as N x (S K).
arma::mat scaled_residuals(const PartData& pd, const arma::mat& theta, const arma::vec& v) {
  arma::mat E(pd.N, pd.S * pd.K);
  for (arma::uword k = 1; k <= pd.K; ++k) {
    const double sc = 1.0 / std::sqrt(v[k]);
    for (arma::uword s = 0; s < pd.S; ++s) {
      const arma::vec th = theta.col(k).subvec(s * pd.p, s * pd.p + pd.p - 1);
      E.col((k - 1) * pd.S + s) = (pd.y[k - 1].col(s) - pd.F[k - 1].slice(s) * th) * sc;
    }
  }
  return E;
}

double beta_log_lik(const PartData& pd, const arma::mat& X, const arma::vec& beta, const arma::mat& E,
                    double sum_log_v) {
  arma::mat V = corr_matrix(X, beta);
  V.diag() += kJitter;
  const Cholesky cV = factor_spd(V, 0.0, "input correlation V", 3);
  const double nobs = static_cast<double>(pd.N * pd.S * pd.K);
  const double quad = arma::accu(arma::square(cV.whiten(E)));
  return -0.5 * (nobs * std::log(2.0 * std::numbers::pi) + static_cast<double>(pd.N * pd.S) * sum_log_v +
                 static_cast<double>(pd.S * pd.K) * cV.log_det + quad);
}

std::vector<arma::mat> innovations(const arma::mat& theta, arma::uword p, arma::uword S) {
  std::vector<arma::mat> X(theta.n_cols - 1);
  for (arma::uword k = 1; k < theta.n_cols; ++k) {
    const arma::vec dx = theta.col(k) - theta.col(k - 1);
    X[k - 1] = arma::reshape(dx, p, S);
  }
  return X;
}

std::string describe(const arma::vec& x) {
  std::ostringstream os;
  os << "(";
  for (arma::uword i = 0; i < x.n_elem; ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

EmulatorDraws fit_part(const Ensemble& ens, const EmulatorConfig& cfg, EmulatorMode w_mode, Rng& rng) {
  ens.validate();
  cfg.validate();
  const PartData pd = make_part_data(ens);
  const arma::uword p = pd.p, S = pd.S, K = pd.K, d = ens.X.n_cols;
  const bool discount_state = w_mode == EmulatorMode::Heterogeneous && cfg.het_state == HetState::Discount;
  const bool fixed_state = w_mode == EmulatorMode::Heterogeneous && cfg.het_state == HetState::FixedIdentity;
  const bool has_range = !discount_state && !fixed_state && ens.domain.range_dim() > 0;
  if (w_mode == EmulatorMode::PredictiveProcess && cfg.knots.knots.is_empty()) {
    throw ArgumentError("emulator: predictive-process mode needs knots");
  }

  SsmSpec spec;
  spec.y = pd.y;
  spec.F = pd.F;
  spec.omega = cfg.omega;
  arma::vec m0_loc(p, arma::fill::zeros);
  m0_loc[0] = 1.0;
  spec.m0 = arma::repmat(m0_loc, S, 1);
  spec.M0 = cfg.M0_scale * arma::eye(p * S, p * S);
  spec.n0 = cfg.n0;
  spec.d0 = cfg.d0;
  if (discount_state) spec.state_discount = cfg.het_discount;
  if (fixed_state) spec.W = arma::eye(p * S, p * S);

  arma::vec beta = cfg.beta_init.is_empty() ? arma::vec(d, arma::fill::ones) : cfg.beta_init;
  arma::vec range;
  if (has_range) {
    range = cfg.omega_init.is_empty() ? arma::vec(ens.domain.range_dim(), arma::fill::ones) : cfg.omega_init;
  }
  if (beta.n_elem != d) throw ArgumentError("emulator: beta_init has the wrong length");
  if (has_range && range.n_elem != ens.domain.range_dim()) throw ArgumentError("emulator: omega_init has the wrong length");
  check_positive(beta, "beta");
  if (has_range) check_positive(range, "spatial range");

  arma::mat Tcov = arma::eye(p, p);
  arma::mat hT = Tcov;
  const double nu0 = cfg.nu0 > 0.0 ? cfg.nu0 : static_cast<double>(p) + 2.0;
  const arma::mat T0 = cfg.T0.is_empty() ? arma::mat(arma::eye(p, p)) : cfg.T0;

  auto build_state_corr = [&](const arma::vec& rg) {
    return state_corr(w_mode, ens.domain, cfg.knots, rg, hT);
  };
  auto set_V = [&](const arma::vec& b) {
    spec.V = corr_matrix(ens.X, b);
    spec.V.diag() += kJitter;
  };
  auto set_W = [&]() {
    if (!discount_state && !fixed_state) spec.W = build_state_corr(range).dense();
  };

  set_V(beta);
  set_W();
  StateDraw state = ffbs(spec, rng, cfg.smoother);

  EmulatorDraws out;
  const int n_keep = cfg.n_retained();
  out.theta.reserve(n_keep);
  out.h_T.reserve(n_keep);
  out.v.set_size(n_keep, K + 1);
  out.beta.set_size(n_keep, d);
  out.omega_sp.set_size(n_keep, has_range ? range.n_elem : 0);

  StepAdapter step_range(cfg.eps1, cfg.adapt), step_beta(cfg.eps2, cfg.adapt);
  AcceptanceCounter acc_range, acc_beta;
  int kept = 0;
  for (int it = 1; it <= cfg.n_samples; ++it) {
    try {
      if (it == cfg.burn_in + 1) {
        step_range.freeze();
        step_beta.freeze();
      }
      const bool burning = it <= cfg.burn_in;
      // (a) spatial range of the state innovations
      if (has_range) {
        const std::vector<arma::mat> Xk = innovations(state.theta, p, S);
        auto ll = [&](const arma::vec& rg) {
          try {
            return build_state_corr(rg).log_density(Xk, state.v);
          } catch (const NumericError&) {
            return -arma::datum::inf;
          }
        };
        double cur = build_state_corr(range).log_density(Xk, state.v);
        const bool ok = log_rw_step(range, cur, ll, cfg.prior, step_range.eps(), rng);
        step_range.record(ok);
        if (!burning) acc_range.record(ok);
      }
      // (b) input-space range, conditional likelihood given theta and v
      {
        const arma::mat E = scaled_residuals(pd, state.theta, state.v);
        const double sum_log_v = arma::accu(arma::log(state.v.subvec(1, K)));
        auto ll = [&](const arma::vec& b) {
          try {
            return beta_log_lik(pd, ens.X, b, E, sum_log_v);
          } catch (const NumericError&) {
            return -arma::datum::inf;
          }
        };
        double cur = beta_log_lik(pd, ens.X, beta, E, sum_log_v);
        const bool ok = log_rw_step(beta, cur, ll, cfg.prior, step_beta.eps(), rng);
        step_beta.record(ok);
        if (!burning) acc_beta.record(ok);
      }
      // (c) parameter-expanded cross covariance
      if (cfg.update_T && !discount_state && !fixed_state) {
        const std::vector<arma::mat> Xk = innovations(state.theta, p, S);
        arma::mat SS(p, p, arma::fill::zeros);
        for (const auto& X : Xk) SS += X * X.t();
        const arma::mat B = T0 + 0.5 * SS;
        const double shape = nu0 + 0.5 * static_cast<double>(K);
        const arma::mat Tinv = rng.wishart(2.0 * shape, arma::inv_sympd(2.0 * B));
        Tcov = arma::inv_sympd(symmetrize(Tinv));
        hT = corr_from_cov(Tcov);
      }
      // (d) FFBS refresh
      set_V(beta);
      set_W();
      state = ffbs(spec, rng, cfg.smoother);
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "emulator sampler failed at iteration " << it << " (beta=" << describe(beta);
      if (has_range) os << ", range=" << describe(range);
      os << "): " << e.what();
      throw NumericError(os.str());
    }

    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && kept < n_keep) {
      out.theta.push_back(state.theta);
      out.v.row(kept) = state.v.t();
      out.beta.row(kept) = beta.t();
      if (has_range) out.omega_sp.row(kept) = range.t();
      out.h_T.push_back(hT);
      ++kept;
    }
  }
  out.accept_beta = acc_beta.rate();
  out.accept_omega = acc_range.rate();
  return out;
}

namespace {

Ensemble sub_ensemble(const Ensemble& ens, arma::uword s) {
  Ensemble sub;
  sub.Y = arma::cube(ens.N(), 1, ens.T());
  for (arma::uword t = 0; t < ens.T(); ++t) sub.Y.slice(t).col(0) = ens.Y.slice(t).col(s);
  sub.X = ens.X;
  sub.domain = ens.domain.subset(arma::uvec{s});
  sub.p = ens.p;
  return sub;
}

EmulatorFit fit_shell(const Ensemble& ens, const EmulatorConfig& cfg) {
  EmulatorFit fit;
  fit.mode = cfg.mode;
  fit.p = ens.p;
  fit.X = ens.X;
  fit.Y = ens.Y;
  fit.domain = ens.domain;
  fit.knots = cfg.knots;
  fit.m0.zeros(ens.p);
  fit.m0[0] = 1.0;
  return fit;
}

}  // namespace

EmulatorFit fit_heterogeneous(const Ensemble& ens, const EmulatorConfig& cfg) {
  ens.validate();
  cfg.validate();
  EmulatorFit fit = fit_shell(ens, cfg);
  fit.mode = EmulatorMode::Heterogeneous;
  const arma::uword S = ens.S();
  fit.parts.resize(S);
  const Rng master(cfg.seed);
  parallel_for(S, std::max(1u, cfg.workers), [&](std::size_t s) {
    const Ensemble sub = sub_ensemble(ens, s);
    Rng rng = master.split(s);
    EmulatorDraws part = fit_part(sub, cfg, EmulatorMode::Heterogeneous, rng);
    part.locations = arma::uvec{static_cast<arma::uword>(s)};
    fit.parts[s] = std::move(part);
  });
  return fit;
}

EmulatorFit fit_emulator(const Ensemble& ens, const EmulatorConfig& cfg) {
  if (cfg.mode == EmulatorMode::Heterogeneous) return fit_heterogeneous(ens, cfg);
  ens.validate();
  cfg.validate();
  if (cfg.mode == EmulatorMode::PredictiveProcess && ens.domain.is_network()) {
    throw ArgumentError("emulator: predictive-process mode needs coordinate locations");
  }
  EmulatorFit fit = fit_shell(ens, cfg);
  Rng rng(cfg.seed);
  EmulatorDraws part = fit_part(ens, cfg, cfg.mode, rng);
  part.locations = arma::regspace<arma::uvec>(0, ens.S() - 1);
  fit.parts.push_back(std::move(part));
  return fit;
}

namespace {

arma::vec input_cross_corr(const arma::mat& X, const arma::vec& eta, const arma::vec& beta) {
  arma::vec r = cross_corr(X, eta.t(), beta).col(0);
  // A new input that coincides with a design point shares its nugget.
  for (arma::uword i = 0; i < X.n_rows; ++i) {
    if (arma::approx_equal(X.row(i).t(), eta, "absdiff", 0.0)) r[i] += kJitter;
  }
  return r;
}

}  // namespace

DrawPredictor::DrawPredictor(const EmulatorFit& fit, std::size_t draw) : fit_(&fit), draw_(draw) {
  if (draw >= fit.n_draws()) throw ArgumentError("DrawPredictor: draw index out of range");
  const arma::uword p = fit.p, K = fit.K(), N = fit.X.n_rows;
  cV_.reserve(fit.parts.size());
  resid_.resize(fit.parts.size());
  for (std::size_t j = 0; j < fit.parts.size(); ++j) {
    const EmulatorDraws& part = fit.parts[j];
    arma::mat V = corr_matrix(fit.X, part.beta.row(draw).t());
    V.diag() += kJitter;
    cV_.push_back(factor_spd(V, 0.0, "input correlation V", 3));
    const arma::mat& theta = part.theta[draw];
    resid_[j].resize(K);
    for (arma::uword k = 1; k <= K; ++k) {
      const arma::uword t = p + k - 1;
      arma::mat R(N, part.locations.n_elem);
      for (arma::uword l = 0; l < part.locations.n_elem; ++l) {
        const arma::uword s = part.locations[l];
        R.col(l) = fit.Y.slice(t).col(s) - build_ar_design(fit.Y, t, s, p) * theta.col(k).subvec(l * p, l * p + p - 1);
      }
      resid_[j][k - 1] = std::move(R);
    }
  }
}

Prediction DrawPredictor::predict(const arma::vec& eta, const LagFeed& feed) const {
  const EmulatorFit& fit = *fit_;
  const arma::uword p = fit.p, K = fit.K(), S = fit.S(), T = fit.Y.n_slices;
  if (eta.n_elem != fit.X.n_cols) throw ArgumentError("predict: input has the wrong dimension");
  const bool recursive = feed.kind == LagFeed::Kind::Recursive;
  if (recursive && (feed.values.n_rows != S || feed.values.n_cols < p)) {
    throw ArgumentError("predict: recursive lag feed must be S x p");
  }
  if (!recursive && (feed.values.n_rows != S || feed.values.n_cols != T)) {
    throw ArgumentError("predict: fixed lag feed must be S x T");
  }
  Prediction out;
  out.mean.set_size(S, K);
  out.var.set_size(S, K);
  arma::mat lags(S, T, arma::fill::zeros);
  if (recursive) {
    lags.cols(0, p - 1) = feed.values.cols(0, p - 1);
  } else {
    lags = feed.values;
  }

  const std::size_t J = fit.parts.size();
  std::vector<arma::vec> w(J);
  std::vector<double> c(J);
  for (std::size_t j = 0; j < J; ++j) {
    const arma::vec r = input_cross_corr(fit.X, eta, fit.parts[j].beta.row(draw_).t());
    w[j] = cV_[j].solve(r);
    // the jitter only conditions V; the latent output itself has unit prior correlation
    c[j] = 1.0 - arma::dot(r, w[j]);
    if (c[j] < 0.0) {
      if (c[j] < -1e-6) warn("emulator predictive variance below zero (" + std::to_string(c[j]) + "), clamped to 0");
      c[j] = 0.0;
    }
  }
  for (arma::uword k = 1; k <= K; ++k) {
    const arma::uword t = p + k - 1;
    for (std::size_t j = 0; j < J; ++j) {
      const EmulatorDraws& part = fit.parts[j];
      const arma::mat& theta = part.theta[draw_];
      const arma::rowvec wr = w[j].t() * resid_[j][k - 1];
      const double vk = part.v(draw_, k);
      for (arma::uword l = 0; l < part.locations.n_elem; ++l) {
        const arma::uword s = part.locations[l];
        double mu = wr[l];
        for (arma::uword lag = 0; lag < p; ++lag) mu += lags(s, t - 1 - lag) * theta(l * p + lag, k);
        out.mean(s, k - 1) = mu;
        out.var(s, k - 1) = vk * c[j];
      }
    }
    if (recursive) lags.col(t) = out.mean.col(k - 1);
  }
  return out;
}

std::vector<Prediction> emulator_predict(const EmulatorFit& fit, const arma::vec& eta, const LagFeed& feed) {
  std::vector<Prediction> out;
  out.reserve(fit.n_draws());
  for (std::size_t j = 0; j < fit.n_draws(); ++j) out.push_back(DrawPredictor(fit, j).predict(eta, feed));
  return out;
}

arma::mat training_mean_start(const EmulatorFit& fit) {
  arma::mat out(fit.S(), fit.p);
  for (arma::uword t = 0; t < fit.p; ++t) out.col(t) = arma::mean(fit.Y.slice(t), 0).t();
  return out;
}

namespace {

bool coincides(const arma::mat& coords, arma::uword i, const arma::vec& s) {
  return arma::approx_equal(coords.row(i).t(), s, "absdiff", 0.0);
}

}  // namespace

LatentKriging latent_kriging(const EmulatorFit& fit, std::size_t draw, const arma::vec& s_new) {
  if (fit.mode == EmulatorMode::Heterogeneous) throw ArgumentError("latent interpolation needs a spatial fit");
  if (fit.domain.is_network()) throw ArgumentError("latent interpolation needs coordinate locations");
  if (draw >= fit.n_draws()) throw ArgumentError("latent interpolation: draw index out of range");
  const EmulatorDraws& part = fit.parts.front();
  const arma::mat& coords = fit.domain.coords;
  if (s_new.n_elem != coords.n_cols) throw ArgumentError("latent interpolation: location has the wrong dimension");
  const arma::uword S = coords.n_rows, p = fit.p;
  const arma::vec range = part.omega_sp.row(draw).t();
  const arma::mat& hT = part.h_T[draw];
  const StateCorr sc = state_corr(fit.mode, fit.domain, fit.knots, range, hT);
  const arma::mat W = sc.dense();

  arma::mat k(p * S, p);
  arma::mat Kss;
  if (fit.mode == EmulatorMode::PredictiveProcess) {
    const PredictiveProcess pp(fit.knots.knots, range, hT);
    for (arma::uword i = 0; i < S; ++i) {
      const bool same = coincides(coords, i, s_new);
      arma::mat blk = (pp.low_rank(coords.row(i).t(), s_new) + (same ? kJitter : 0.0)) * hT;
      if (same) blk.diag() += sc.delta[i] * hT.diag();
      k.rows(i * p, i * p + p - 1) = blk;
    }
    Kss = (pp.low_rank(s_new, s_new) + kJitter) * hT;
    Kss.diag() += pp.delta(s_new) * hT.diag();
  } else {
    const arma::vec c = cross_corr(coords, s_new.t(), range).col(0);
    for (arma::uword i = 0; i < S; ++i) {
      const double ci = c[i] + (coincides(coords, i, s_new) ? kJitter : 0.0);
      k.rows(i * p, i * p + p - 1) = ci * hT;
    }
    Kss = (1.0 + kJitter) * hT;
  }
  const Cholesky cW = factor_spd(W, 0.0, "state correlation W", 3);
  LatentKriging out;
  out.gain = cW.solve(k).t();
  out.scale = symmetrize(Kss - out.gain * k);
  return out;
}

arma::mat interpolate_latent(const EmulatorFit& fit, std::size_t draw, const arma::vec& s_new, Rng& rng) {
  const LatentKriging kr = latent_kriging(fit, draw, s_new);
  const EmulatorDraws& part = fit.parts.front();
  const arma::mat& theta = part.theta[draw];
  const arma::uword p = fit.p, K = fit.K();
  const arma::vec m0_all = arma::repmat(fit.m0, fit.S(), 1);
  arma::mat out(p, K + 1);
  out.col(0) = draw_mvn(fit.m0 + kr.gain * (theta.col(0) - m0_all), kr.scale, part.v(draw, 0), rng);
  for (arma::uword k = 1; k <= K; ++k) {
    const arma::vec mean = out.col(k - 1) + kr.gain * (theta.col(k) - theta.col(k - 1));
    out.col(k) = draw_mvn(mean, kr.scale, part.v(draw, k), rng);
  }
  return out;
}

}  // namespace ssgp
