#include "ssgp/simulators.hpp"

#include <cmath>
#include <sstream>

#include "ssgp/errors.hpp"
#include "ssgp/random.hpp"

namespace ssgp {

namespace {

void lv_rhs(const LvParams& p, double u, double v, double& du, double& dv) {
  du = p.eta1 * u - p.eta2 * u * v;
  dv = -p.eta3 * v + p.eta4 * u * v;
}

}  // namespace

LvSeries solve_lotka_volterra(const LvParams& p) {
  if (!(p.dt > 0.0) || p.record_every < 1) throw ArgumentError("lotka-volterra: need dt > 0 and record_every >= 1");
  if (!(p.u0 > 0.0) || !(p.v0 > 0.0)) throw ArgumentError("lotka-volterra: initial populations must be positive");
  for (double e : {p.eta1, p.eta2, p.eta3, p.eta4}) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ArgumentError("lotka-volterra: rates must be finite and non-negative");
  }
  const arma::uword n_out = p.n_steps / p.record_every + 1;
  LvSeries out;
  out.t.set_size(n_out);
  out.u.set_size(n_out);
  out.v.set_size(n_out);
  double u = p.u0, v = p.v0;
  out.t[0] = 0.0;
  out.u[0] = u;
  out.v[0] = v;
  const double h = p.dt;
  for (arma::uword step = 1; step <= p.n_steps; ++step) {
    double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
    lv_rhs(p, u, v, k1u, k1v);
    lv_rhs(p, u + 0.5 * h * k1u, v + 0.5 * h * k1v, k2u, k2v);
    lv_rhs(p, u + 0.5 * h * k2u, v + 0.5 * h * k2v, k3u, k3v);
    lv_rhs(p, u + h * k3u, v + h * k3v, k4u, k4v);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!(u > 0.0) || !(v > 0.0)) {
      std::ostringstream os;
      os << "lotka-volterra: population left the positive orthant at step " << step << " (t = " << step * h
         << "); try a smaller dt";
      throw NumericError(os.str());
    }
    if (step % p.record_every == 0) {
      const arma::uword i = step / p.record_every;
      out.t[i] = static_cast<double>(step) * h;
      out.u[i] = u;
      out.v[i] = v;
    }
  }
  return out;
}

double lv_first_integral(const LvParams& p, double u, double v) {
  return p.eta4 * u - p.eta3 * std::log(u) + p.eta2 * v - p.eta1 * std::log(v);
}

arma::mat build_diffusion_transition(double alpha, double dt, double ds, arma::uword n) {
  if (n < 1 || !(dt > 0.0) || !(ds > 0.0) || !(alpha >= 0.0)) {
    throw ArgumentError("diffusion transition: need n >= 1, dt > 0, ds > 0, alpha >= 0");
  }
  const double lambda = alpha * dt / (ds * ds);
  if (lambda > 0.5) {
    std::ostringstream os;
    os << "diffusion transition: alpha dt / ds^2 = " << lambda << " exceeds the stability bound 1/2";
    throw NumericError(os.str());
  }
  arma::mat G(n, n, arma::fill::zeros);
  for (arma::uword i = 0; i < n; ++i) {
    G(i, i) = 1.0 - 2.0 * lambda;
    if (i > 0) G(i, i - 1) = lambda;
    if (i + 1 < n) G(i, i + 1) = lambda;
  }
  return G;
}

SirPdeParams SirPdeParams::infections_diffuse(double eta1, double eta2, double alpha2) {
  SirPdeParams p;
  p.eta1 = eta1;
  p.eta2 = eta2;
  p.alpha1 = 0.0;
  p.alpha2 = alpha2;
  p.alpha3 = 0.0;
  return p;
}

namespace {

// 5-point Laplacian with zero values outside the grid.
void laplacian(const arma::vec& f, arma::uword n, double inv_ds2, arma::vec& out) {
  for (arma::uword r = 0; r < n; ++r) {
    for (arma::uword c = 0; c < n; ++c) {
      const arma::uword i = r * n + c;
      const double up = r > 0 ? f[i - n] : 0.0;
      const double down = r + 1 < n ? f[i + n] : 0.0;
      const double left = c > 0 ? f[i - 1] : 0.0;
      const double right = c + 1 < n ? f[i + 1] : 0.0;
      out[i] = (up + down + left + right - 4.0 * f[i]) * inv_ds2;
    }
  }
}

}  // namespace

SirResult solve_sir_rd(const SirPdeParams& p) {
  if (p.n < 1 || !(p.dt > 0.0) || !(p.ds > 0.0) || !(p.N_pop > 0.0) || p.record_every < 1) {
    throw ArgumentError("sir pde: invalid grid, step or population");
  }
  for (double a : {p.eta1, p.eta2, p.alpha1, p.alpha2, p.alpha3}) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ArgumentError("sir pde: rates must be finite and non-negative");
  }
  const double inv_ds2 = 1.0 / (p.ds * p.ds);
  for (double a : {p.alpha1, p.alpha2, p.alpha3}) {
    if (a * p.dt * inv_ds2 > 0.25) {
      std::ostringstream os;
      os << "sir pde: alpha dt / ds^2 = " << a * p.dt * inv_ds2 << " violates the stability bound 1/4";
      throw NumericError(os.str());
    }
  }
  const arma::uword cells = p.n * p.n;
  if (!p.seeds.is_empty() && p.seeds.max() >= cells) throw ArgumentError("sir pde: seed cell outside the grid");
  if (!(p.initial_infected >= 0.0) || p.initial_infected > p.N_pop) {
    throw ArgumentError("sir pde: initial infections must lie in [0, N_pop]");
  }

  arma::vec S(cells, arma::fill::value(p.N_pop)), I(cells, arma::fill::zeros), R(cells, arma::fill::zeros);
  for (arma::uword s : p.seeds) {
    I[s] = p.initial_infected;
    S[s] = p.N_pop - p.initial_infected;
  }
  const arma::uword n_out = p.n_steps / p.record_every + 1;
  SirResult out;
  out.S.set_size(cells, n_out);
  out.I.set_size(cells, n_out);
  out.R.set_size(cells, n_out);
  out.S.col(0) = S;
  out.I.col(0) = I;
  out.R.col(0) = R;

  arma::vec lS(cells, arma::fill::zeros), lI(cells), lR(cells, arma::fill::zeros);
  for (arma::uword step = 1; step <= p.n_steps; ++step) {
    if (p.alpha1 > 0.0) laplacian(S, p.n, inv_ds2, lS);
    laplacian(I, p.n, inv_ds2, lI);
    if (p.alpha3 > 0.0) laplacian(R, p.n, inv_ds2, lR);
    const arma::vec infect = p.eta1 * (S % I) / p.N_pop;
    const arma::vec recover = p.eta2 * I;
    S += p.dt * (-infect + p.alpha1 * lS);
    I += p.dt * (infect - recover + p.alpha2 * lI);
    R += p.dt * (recover + p.alpha3 * lR);
    if (!S.is_finite() || !I.is_finite() || !R.is_finite()) {
      std::ostringstream os;
      os << "sir pde: non-finite state at step " << step << "; the reaction step eta dt is too large for dt = "
         << p.dt << " (alpha dt / ds^2 must stay below 1/4)";
      throw NumericError(os.str());
    }
    if (step % p.record_every == 0) {
      const arma::uword i = step / p.record_every;
      out.S.col(i) = S;
      out.I.col(i) = I;
      out.R.col(i) = R;
    }
  }
  return out;
}

arma::mat grid_coords(arma::uword n) {
  arma::mat out(n * n, 2);
  for (arma::uword r = 0; r < n; ++r) {
    for (arma::uword c = 0; c < n; ++c) {
      out(r * n + c, 0) = static_cast<double>(c);
      out(r * n + c, 1) = static_cast<double>(r);
    }
  }
  return out;
}

NetResult simulate_network(const NetParams& p) {
  const arma::mat& A = p.adjacency;
  const arma::uword n = A.n_rows;
  if (n == 0 || A.n_cols != n) throw ArgumentError("network: adjacency must be square and non-empty");
  if (!A.is_symmetric()) throw ArgumentError("network: adjacency must be symmetric");
  if (arma::any(A.diag() != 0.0)) throw ArgumentError("network: adjacency must have a zero diagonal");
  if (arma::any(arma::vectorise(A) != 0.0 && arma::vectorise(A) != 1.0)) throw ArgumentError("network: adjacency must be 0/1");
  if (p.r.n_elem != 1 && p.r.n_elem != n) throw ArgumentError("network: r must be a scalar or one value per node");
  if (arma::any(p.r < 0.0) || arma::any(p.r > 1.0)) throw ArgumentError("network: r must lie in [0, 1]");
  if (!(p.d >= 0.0 && p.d <= 1.0)) throw ArgumentError("network: d must lie in [0, 1]");
  if (p.initial.n_elem != n) throw ArgumentError("network: initial activation needs one value per node");
  if (p.T < 1) throw ArgumentError("network: T must be at least 1");

  const arma::vec r = p.r.n_elem == 1 ? arma::vec(n, arma::fill::value(p.r[0])) : p.r;
  const arma::vec deg = arma::sum(A, 1);
  NetResult out;
  out.inflow.set_size(p.T, n);
  out.reservoir.set_size(p.T, n);
  arma::vec in = p.initial;
  arma::vec res(n), outflow(n);
  for (arma::uword t = 0; t < p.T; ++t) {
    if (t > 0) in = A * outflow + res;
    for (arma::uword j = 0; j < n; ++j) {
      if (deg[j] > 0.0) {
        res[j] = r[j] * in[j];
        outflow[j] = (1.0 - p.d) * (1.0 - r[j]) * in[j] / deg[j];
      } else {
        res[j] = (1.0 - p.d) * in[j];
        outflow[j] = 0.0;
      }
    }
    out.inflow.row(t) = in.t();
    out.reservoir.row(t) = res.t();
  }
  return out;
}

arma::mat random_graph(arma::uword n, double prob, std::uint64_t seed) {
  if (n < 2 || !(prob > 0.0 && prob <= 1.0)) throw ArgumentError("random_graph: need n >= 2 and prob in (0, 1]");
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    arma::mat A(n, n, arma::fill::zeros);
    for (arma::uword i = 0; i < n; ++i) {
      for (arma::uword j = i + 1; j < n; ++j) {
        if (rng.uniform() < prob) A(i, j) = A(j, i) = 1.0;
      }
    }
    // connectivity by breadth-first search
    arma::uvec seen(n, arma::fill::zeros);
    std::vector<arma::uword> queue{0};
    seen[0] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      for (arma::uword j = 0; j < n; ++j) {
        if (A(queue[h], j) != 0.0 && !seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
    if (queue.size() == n) return A;
  }
  throw NumericError("random_graph: no connected graph found; raise prob");
}

}  // namespace ssgp
