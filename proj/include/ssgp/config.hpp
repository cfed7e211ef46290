#pragma once

#include <armadillo>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "ssgp/calibrator.hpp"
#include "ssgp/emulator.hpp"
#include "ssgp/simulators.hpp"

namespace ssgp {

enum class SimKind { Lv, SirPde, Network };

struct DesignSection {
  arma::uword n_runs = 50;
  arma::uword dims = 4;
  arma::mat bounds;  // dims x 2 (lo, hi)
  bool midpoint = false;
  std::optional<std::uint64_t> seed;
};

struct SimulatorSection {
  SimKind kind = SimKind::Lv;
  arma::vec holdout;  // raw-scale held-out input for field data
  double noise_sd = 1.0;
  LvParams lv;
  SirPdeParams pde;
  // network
  arma::uword nodes = 20;
  double edge_prob = 0.2;
  std::uint64_t graph_seed = 7;
  arma::uword net_T = 20;
  arma::uvec initial_nodes;  // nodes that start with initial_value; empty means every node
  double initial_value = 10.0;
};

struct EmulatorSection {
  EmulatorMode mode = EmulatorMode::Spatial;
  double omega = 0.95;
  arma::uword p = 1;
  int n_samples = 10000;
  int burn_in = 2000;
  int thin = 10;
  double eps1 = 0.1;
  double eps2 = 0.1;
  arma::uword knots = 4;  // per spatial dimension, predictive-process mode
  bool per_location_scaling = true;
  double het_discount = 0.95;
  bool update_T = false;
  Smoother smoother = Smoother::Conditional;
};

struct CalibrationSection {
  double b = 0.95;
  double eps3 = 0.1;
  bool bias_enabled = true;
  int n_samples = 10000;
  int burn_in = 2000;
  int thin = 10;
  arma::uword emulator_stride = 1;
  std::optional<std::uint64_t> seed;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  DesignSection design;
  SimulatorSection simulator;
  EmulatorSection emulator;
  CalibrationSection calibration;
  std::string out = "ssgp_out";
  std::string canonical;  // normalized JSON text, hashed into manifests

  arma::vec lo() const { return design.bounds.col(0); }
  arma::vec hi() const { return design.bounds.col(1); }
};

std::string to_string(SimKind k);
arma::uword input_dims(SimKind k);

// Parse JSON text, apply SSGP_<SECTION>__<KEY> overrides from `env`, fill
// kind-specific defaults and validate. Unknown keys raise ValidationError.
PipelineConfig parse_config(const std::string& json_text, const std::map<std::string, std::string>& env = {});
PipelineConfig load_config(const std::string& path);
// Collect SSGP_* variables from the process environment.
std::map<std::string, std::string> environment_overrides();

EmulatorConfig emulator_config(const PipelineConfig& cfg, EmulatorMode mode, std::uint64_t seed, unsigned workers);
CalibConfig calibration_config(const PipelineConfig& cfg, std::uint64_t seed);

}  // namespace ssgp
