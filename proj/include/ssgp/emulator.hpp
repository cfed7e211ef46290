#pragma once

#include <armadillo>
#include <cstdint>
#include <string>
#include <vector>

#include "ssgp/kernels.hpp"
#include "ssgp/mcmc.hpp"
#include "ssgp/ssm.hpp"

namespace ssgp {

class Rng;

// Spatial support of the outputs: coordinates (S x dim) or a network adjacency.
struct Domain {
  arma::mat coords;
  arma::mat adjacency;

  bool is_network() const { return !adjacency.is_empty(); }
  arma::uword size() const { return is_network() ? adjacency.n_rows : coords.n_rows; }
  // Number of spatial range parameters (0 for networks).
  arma::uword range_dim() const { return is_network() ? 0 : coords.n_cols; }
  // Correlation over locations, no jitter. `range` is ignored for networks.
  arma::mat corr(const arma::vec& range) const;
  Domain subset(const arma::uvec& idx) const;
};

// Outputs Y(i, s, t) for run i, location s, time t (0-based, T times), with
// unit-cube inputs X (N x d). Model time k = 1..T-p uses data time t = p + k - 1.
struct Ensemble {
  arma::cube Y;
  arma::mat X;
  Domain domain;
  arma::uword p = 1;

  arma::uword N() const { return Y.n_rows; }
  arma::uword S() const { return Y.n_cols; }
  arma::uword T() const { return Y.n_slices; }
  arma::uword K() const { return Y.n_slices - p; }
  void validate() const;
};

// Lagged outputs y_{t-1}, ..., y_{t-p} at location j for every run (N x p).
// `t` is a 0-based data time and must be at least p.
arma::mat build_ar_design(const arma::cube& Y, arma::uword t, arma::uword j, arma::uword p);

// Per-location (or global) centring and scaling of simulator outputs.
struct OutputTransform {
  arma::vec center;  // S
  arma::vec scale;   // S

  static OutputTransform fit(const arma::cube& Y, bool per_location, double floor = 1e-8);
  arma::cube apply(const arma::cube& Y) const;
  arma::mat apply(const arma::mat& Z) const;  // S x T
  arma::mat invert_mean(const arma::mat& Z) const;
  arma::mat invert_sd(const arma::mat& Z) const;
};

enum class EmulatorMode { Spatial, Heterogeneous, PredictiveProcess };
enum class HetState { Discount, FixedIdentity };

std::string to_string(EmulatorMode mode);
EmulatorMode parse_mode(const std::string& s);

struct EmulatorConfig {
  EmulatorMode mode = EmulatorMode::Spatial;
  double omega = 0.95;
  int n_samples = 10000;
  int burn_in = 2000;
  int thin = 10;
  double eps1 = 0.1;  // spatial range step
  double eps2 = 0.1;  // input range step
  bool adapt = true;  // tune steps during burn-in only
  LogNormalPrior prior;
  arma::vec beta_init;   // default: ones
  arma::vec omega_init;  // default: ones
  bool update_T = false;
  double nu0 = -1.0;  // default p + 2
  arma::mat T0;       // default identity
  double n0 = 1.0;
  double d0 = 1.0;
  double M0_scale = 1.0;
  KnotSet knots;  // predictive-process mode
  double het_discount = 0.95;
  HetState het_state = HetState::Discount;
  Smoother smoother = Smoother::Conditional;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  int n_retained() const;
  void validate() const;
};

struct EmulatorDraws {
  arma::uvec locations;           // ensemble location indices covered
  std::vector<arma::mat> theta;   // per sample: q x (K + 1), q = p * |locations|
  arma::mat v;                    // samples x (K + 1)
  arma::mat beta;                 // samples x d
  arma::mat omega_sp;             // samples x range_dim (may have no columns)
  std::vector<arma::mat> h_T;     // per sample: p x p
  double accept_beta = 0.0;
  double accept_omega = 0.0;

  std::size_t size() const { return theta.size(); }
};

// Posterior draws plus everything needed to predict from them.
struct EmulatorFit {
  EmulatorMode mode = EmulatorMode::Spatial;
  arma::uword p = 1;
  arma::mat X;
  arma::cube Y;  // training outputs on the emulation scale
  Domain domain;
  KnotSet knots;
  arma::vec m0;  // per-location prior mean of theta_0 (length p)
  std::vector<EmulatorDraws> parts;

  std::size_t n_draws() const { return parts.empty() ? 0 : parts.front().size(); }
  arma::uword S() const { return Y.n_cols; }
  arma::uword K() const { return Y.n_slices - p; }
};

// Spatial factor of the state correlation: W = (C + jitter I) (x) h(T) + diag(delta) (x) diag(h(T)).
struct StateCorr {
  arma::mat C;
  arma::vec delta;  // zero outside predictive-process mode
  arma::mat hT;

  arma::mat dense(double jitter = kJitter) const;
  // sum_k log N(X_k | 0, v_k W); X_k is p x S with column s the innovation at s.
  double log_density(const std::vector<arma::mat>& X, const arma::vec& v, double jitter = kJitter) const;
};

StateCorr state_corr(EmulatorMode mode, const Domain& domain, const KnotSet& knots, const arma::vec& range,
                     const arma::mat& hT);

EmulatorFit fit_emulator(const Ensemble& ens, const EmulatorConfig& cfg);
EmulatorFit fit_heterogeneous(const Ensemble& ens, const EmulatorConfig& cfg);

// Single-part sampler used by both modes.
EmulatorDraws fit_part(const Ensemble& ens, const EmulatorConfig& cfg, EmulatorMode w_mode, Rng& rng);

// How lagged outputs at a new input are formed.
struct LagFeed {
  enum class Kind { Recursive, Fixed };
  Kind kind = Kind::Recursive;
  // Recursive: S x p starting values for data times 0..p-1.
  // Fixed: S x T series used for every lag.
  arma::mat values;
};

struct Prediction {
  arma::mat mean;  // S x K
  arma::mat var;   // S x K
};

// Caches per-draw quantities so repeated predictions at different inputs are cheap.
class DrawPredictor {
 public:
  DrawPredictor(const EmulatorFit& fit, std::size_t draw);
  Prediction predict(const arma::vec& eta, const LagFeed& feed) const;

 private:
  const EmulatorFit* fit_;
  std::size_t draw_;
  std::vector<Cholesky> cV_;                  // per part
  std::vector<std::vector<arma::mat>> resid_;  // per part, per k: N x S_part
};

std::vector<Prediction> emulator_predict(const EmulatorFit& fit, const arma::vec& eta, const LagFeed& feed);

// Training-run means at data times 0..p-1 (S x p).
arma::mat training_mean_start(const EmulatorFit& fit);

// Kriging of the latent innovation at a new location s* given the innovations
// at the fitted locations: mean = gain * (theta_t - theta_{t-1}), covariance
// v_t * scale. Spatial and predictive-process fits only.
struct LatentKriging {
  arma::mat gain;   // p x q, k(s*)' W^{-1}
  arma::mat scale;  // p x p, K(s*,s*) - k(s*)' W^{-1} k(s*)
};
LatentKriging latent_kriging(const EmulatorFit& fit, std::size_t draw, const arma::vec& s_new);

// Sequential draw of theta_{0:T}(s*) for one posterior draw (p x (K + 1)).
// theta_0(s*) is kriged about the prior mean m0.
arma::mat interpolate_latent(const EmulatorFit& fit, std::size_t draw, const arma::vec& s_new, Rng& rng);

}  // namespace ssgp
