#pragma once

#include <armadillo>
#include <string>
#include <vector>

#include "ssgp/config.hpp"
#include "ssgp/emulator.hpp"

namespace ssgp {

// Simulator output for one raw-scale input: S x T.
arma::mat simulate_one(const SimulatorSection& sim, const arma::vec& x);
Domain simulator_domain(const SimulatorSection& sim);

namespace cli {

// Runs one subcommand; `args` excludes the program name. Returns the exit
// code: 0 success, 1 validation error, 2 numeric failure.
int run(const std::vector<std::string>& args);

}  // namespace cli
}  // namespace ssgp
