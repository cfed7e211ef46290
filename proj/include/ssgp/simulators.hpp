#pragma once

#include <armadillo>
#include <vector>

namespace ssgp {

// du/dt = eta1 u - eta2 u v, dv/dt = -eta3 v + eta4 u v.
struct LvParams {
  double eta1 = 1.0, eta2 = 0.05, eta3 = 1.0, eta4 = 0.05;
  double u0 = 30.0, v0 = 4.0;
  double dt = 0.01;
  arma::uword n_steps = 2000;
  arma::uword record_every = 100;  // output every record_every steps, starting at t = 0
};

struct LvSeries {
  arma::vec t, u, v;
};

LvSeries solve_lotka_volterra(const LvParams& p);
double lv_first_integral(const LvParams& p, double u, double v);

// Explicit heat-equation step on n interior points with zero boundary values.
arma::mat build_diffusion_transition(double alpha, double dt, double ds, arma::uword n);

struct SirPdeParams {
  double eta1 = 0.4;  // transmission
  double eta2 = 0.1;  // recovery
  double alpha1 = 0.0, alpha2 = 0.2, alpha3 = 0.0;
  arma::uword n = 12;  // n x n cells, index r * n + c
  double ds = 1.0;
  double dt = 0.1;
  double N_pop = 100.0;
  arma::uvec seeds;              // seeded cells
  double initial_infected = 5.0;  // infections placed in each seeded cell
  arma::uword n_steps = 300;
  arma::uword record_every = 10;

  // alpha1 = alpha3 = 0: only infections diffuse.
  static SirPdeParams infections_diffuse(double eta1, double eta2, double alpha2);
};

struct SirResult {
  arma::mat S, I, R;  // cells x recorded times
};

SirResult solve_sir_rd(const SirPdeParams& p);

// Cell-centre coordinates (column, row) in units of cells.
arma::mat grid_coords(arma::uword n);

struct NetParams {
  arma::mat adjacency;  // symmetric 0/1, zero diagonal
  arma::vec r;          // one entry, or one per node
  double d = 0.0;
  arma::vec initial;    // inflow at t = 0
  arma::uword T = 20;   // number of reported times
};

struct NetResult {
  arma::mat inflow;     // T x n
  arma::mat reservoir;  // T x n
};

NetResult simulate_network(const NetParams& p);

// Erdos-Renyi graph with edge probability prob, redrawn until connected.
arma::mat random_graph(arma::uword n, double prob, std::uint64_t seed);

}  // namespace ssgp
