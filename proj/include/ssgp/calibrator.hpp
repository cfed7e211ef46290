#pragma once

#include <armadillo>
#include <cstdint>
#include <vector>

#include "ssgp/emulator.hpp"
#include "ssgp/mcmc.hpp"

namespace ssgp {

class Rng;

struct CalibConfig {
  double eps3 = 0.1;
  double b = 0.95;  // bias precision discount
  bool bias_enabled = true;
  LogNormalPrior rho_prior;
  arma::vec rho_init;  // default: ones
  arma::vec eta_init;  // default: centre of the cube
  int n_samples = 10000;
  int burn_in = 2000;
  int thin = 10;
  std::uint64_t seed = 1;
  arma::uword emulator_stride = 1;
  double n0 = 1.0;
  double d0 = 1.0;
  bool adapt = true;

  int n_retained() const;
  void validate() const;
};

struct CalibrationDraws {
  arma::mat eta;               // samples x d, unit cube
  arma::mat rho;               // samples x range_dim
  std::vector<arma::mat> u;    // per sample: S x (K + 1)
  arma::mat nu;                // samples x (K + 1)
  arma::uvec emu_index;        // emulator draw used by each sample
  double accept_eta = 0.0;
  double accept_rho = 0.0;

  std::size_t size() const { return emu_index.n_elem; }
};

// sum_t sum_s log N(z_t(s) | mean_t(s) + u_t(s), nu_t + var_t(s)).
// z is S x K (model times), u is S x (K + 1), nu has K + 1 entries.
double calib_loglik(const arma::mat& z, const Prediction& pred, const arma::mat& u, const arma::vec& nu);

// z_field is S x T on the emulation scale; its first p columns start the
// recursive lag feed, the remaining K columns are the calibration targets.
CalibrationDraws calibrate(const arma::mat& z_field, const EmulatorFit& fit, const CalibConfig& cfg);

struct ReplicateMoments {
  arma::mat mean;  // S x K
  arma::mat sd;    // S x K
};

// One replicate z_rep ~ N(mu + u, nu + var) per calibration sample; returns the
// per-cell sample mean and standard deviation.
ReplicateMoments posterior_replicates(const CalibrationDraws& draws, const EmulatorFit& fit,
                                      const arma::mat& z_field, Rng& rng);

}  // namespace ssgp
