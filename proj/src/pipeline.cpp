#include "ssgp/pipeline.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ssgp/calibrator.hpp"
#include "ssgp/csv.hpp"
#include "ssgp/design.hpp"
#include "ssgp/errors.hpp"
#include "ssgp/parallel.hpp"
#include "ssgp/random.hpp"
#include "ssgp/scoring.hpp"
#include "ssgp/simulators.hpp"
#include "ssgp/store.hpp"

namespace ssgp {

namespace fs = std::filesystem;

arma::mat simulate_one(const SimulatorSection& sim, const arma::vec& x) {
  if (x.n_elem != input_dims(sim.kind)) throw ArgumentError("simulate: input has the wrong dimension");
  switch (sim.kind) {
    case SimKind::Lv: {
      LvParams p = sim.lv;
      p.eta1 = x[0];
      p.eta2 = x[1];
      p.eta3 = x[2];
      p.eta4 = x[3];
      const LvSeries s = solve_lotka_volterra(p);
      return arma::join_cols(s.u.t(), s.v.t());
    }
    case SimKind::SirPde: {
      SirPdeParams p = sim.pde;
      p.eta1 = x[0];
      p.eta2 = x[1];
      p.alpha1 = 0.0;
      p.alpha2 = x[2];
      p.alpha3 = 0.0;
      return solve_sir_rd(p).I;
    }
    case SimKind::Network: {
      NetParams p;
      p.adjacency = random_graph(sim.nodes, sim.edge_prob, sim.graph_seed);
      p.r = arma::vec{x[0]};
      p.d = x[1];
      p.initial.zeros(sim.nodes);
      if (sim.initial_nodes.is_empty()) {
        p.initial.fill(sim.initial_value);
      } else {
        p.initial.elem(sim.initial_nodes).fill(sim.initial_value);
      }
      p.T = sim.net_T;
      return simulate_network(p).inflow.t();
    }
  }
  return {};
}

Domain simulator_domain(const SimulatorSection& sim) {
  Domain d;
  switch (sim.kind) {
    case SimKind::Lv: d.coords = arma::mat(arma::vec{0.0, 1.0}); break;
    case SimKind::SirPde: d.coords = grid_coords(sim.pde.n); break;
    case SimKind::Network: d.adjacency = random_graph(sim.nodes, sim.edge_prob, sim.graph_seed); break;
  }
  return d;
}

namespace cli {

namespace {

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::string> mode;
};

struct Context {
  PipelineConfig cfg;
  std::string out;
  unsigned workers = 1;
  std::optional<std::string> mode_flag;

  std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }
  EmulatorMode mode() const { return mode_flag ? parse_mode(*mode_flag) : cfg.emulator.mode; }
  std::string config_hash() const { return sha256_hex(cfg.canonical); }
};

std::vector<std::string> numbered(const std::string& stem, arma::uword n) {
  std::vector<std::string> out;
  for (arma::uword i = 0; i < n; ++i) out.push_back(stem + std::to_string(i + 1));
  return out;
}

StageRecord record(const Context& ctx, const std::string& stage, std::uint64_t seed, const std::string& started) {
  StageRecord rec;
  rec.stage = stage;
  rec.config_hash = ctx.config_hash();
  rec.master_seed = ctx.cfg.seed;
  rec.stage_seed = seed;
  rec.started = started;
  return rec;
}

// (run_id, t, location_id, value) -> cube N x S x T
arma::cube long_to_cube(const Table& t, arma::uword N, arma::uword S, arma::uword T) {
  const arma::uword cr = t.column("run_id"), ct = t.column("t"), cs = t.column("location_id"), cv = t.column("value");
  if (t.data.n_rows != N * S * T) throw ValidationError("ensemble table does not match its dimensions");
  arma::cube Y(N, S, T, arma::fill::value(arma::datum::nan));
  for (arma::uword r = 0; r < t.data.n_rows; ++r) {
    const double i = t.data(r, cr), tt = t.data(r, ct), s = t.data(r, cs);
    if (i < 0 || i >= N || tt < 0 || tt >= T || s < 0 || s >= S) throw ValidationError("ensemble index out of range");
    Y(arma::uword(i), arma::uword(s), arma::uword(tt)) = t.data(r, cv);
  }
  if (!Y.is_finite()) throw ValidationError("ensemble table has missing or non-finite cells");
  return Y;
}

// (t, location_id, value) -> S x T
arma::mat field_matrix(const Table& t, arma::uword S, arma::uword T, const std::string& col = "value") {
  const arma::uword ct = t.column("t"), cs = t.column("location_id"), cv = t.column(col);
  arma::mat z(S, T, arma::fill::value(arma::datum::nan));
  for (arma::uword r = 0; r < t.data.n_rows; ++r) {
    const double tt = t.data(r, ct), s = t.data(r, cs);
    if (tt < 0 || tt >= T || s < 0 || s >= S) throw ValidationError("field index out of range");
    z(arma::uword(s), arma::uword(tt)) = t.data(r, cv);
  }
  if (!z.is_finite()) throw ValidationError("field table has missing or non-finite cells");
  return z;
}

void cmd_design(const Context& ctx) {
  const std::string started = utc_now();
  const auto& des = ctx.cfg.design;
  const std::uint64_t seed = des.seed ? *des.seed : stage_seed(ctx.cfg.seed, "design");
  DesignSet D = latin_hypercube(des.n_runs, des.dims, seed, des.midpoint);
  D.lo = ctx.cfg.lo();
  D.hi = ctx.cfg.hi();
  const arma::vec ids = arma::regspace(0.0, double(des.n_runs) - 1.0);
  std::vector<std::string> header{"run_id"};
  for (const auto& h : numbered("u_", des.dims)) header.push_back(h);
  for (const auto& h : numbered("x_", des.dims)) header.push_back(h);
  write_table(ctx.path("design.csv"), header, arma::join_rows(ids, D.U, D.raw()));
  StageRecord rec = record(ctx, "design", seed, started);
  rec.files = {"design.csv"};
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

struct DesignFile {
  arma::mat U, raw;
};

DesignFile read_design(const Context& ctx) {
  verify_manifest(ctx.out, "design");
  const Table t = read_table(ctx.path("design.csv"));
  const arma::uword d = ctx.cfg.design.dims;
  if (t.data.n_cols != 1 + 2 * d) throw ValidationError("design.csv does not match design.dims");
  return {t.data.cols(1, d), t.data.cols(d + 1, 2 * d)};
}

void cmd_simulate(const Context& ctx) {
  const std::string started = utc_now();
  const DesignFile D = read_design(ctx);
  const auto& sim = ctx.cfg.simulator;
  const arma::uword N = D.raw.n_rows;
  std::vector<arma::mat> runs(N);
  parallel_for(N, ctx.workers, [&](std::size_t i) { runs[i] = simulate_one(sim, D.raw.row(i).t()); });
  const arma::uword S = runs[0].n_rows, T = runs[0].n_cols;
  arma::mat ylong(N * S * T, 4);
  arma::uword r = 0;
  for (arma::uword i = 0; i < N; ++i)
    for (arma::uword t = 0; t < T; ++t)
      for (arma::uword s = 0; s < S; ++s) ylong.row(r++) = arma::rowvec{double(i), double(t), double(s), runs[i](s, t)};
  write_table(ctx.path("ensemble.csv"), {"run_id", "t", "location_id", "value"}, ylong);
  const arma::vec ids = arma::regspace(0.0, double(N) - 1.0);
  std::vector<std::string> header{"run_id"};
  for (const auto& h : numbered("x_", D.raw.n_cols)) header.push_back(h);
  for (const auto& h : numbered("u_", D.raw.n_cols)) header.push_back(h);
  write_table(ctx.path("runs.csv"), header, arma::join_rows(ids, D.raw, D.U));

  const Domain dom = simulator_domain(sim);
  std::vector<std::string> files{"ensemble.csv", "runs.csv"};
  if (dom.is_network()) {
    std::vector<std::string> h;
    for (arma::uword j = 0; j < dom.size(); ++j) h.push_back("n" + std::to_string(j));
    write_table(ctx.path("adjacency.csv"), h, dom.adjacency);
    files.push_back("adjacency.csv");
  } else {
    write_table(ctx.path("locations.csv"), numbered("c", dom.coords.n_cols), dom.coords);
    files.push_back("locations.csv");
  }
  StageRecord rec = record(ctx, "simulate", 0, started);
  rec.files = files;
  rec.metrics["N"] = double(N);
  rec.metrics["S"] = double(S);
  rec.metrics["T"] = double(T);
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

void cmd_field(const Context& ctx) {
  const std::string started = utc_now();
  const DesignFile D = read_design(ctx);
  const auto& sim = ctx.cfg.simulator;
  const arma::vec x = sim.holdout;
  const arma::vec u = to_unit(x, ctx.cfg.lo(), ctx.cfg.hi());
  for (arma::uword i = 0; i < D.raw.n_rows; ++i) {
    if (arma::approx_equal(D.raw.row(i).t(), x, "absdiff", 0.0) || arma::approx_equal(D.U.row(i).t(), u, "absdiff", 0.0)) {
      throw ValidationError("holdout input coincides with design run " + std::to_string(i));
    }
  }
  const std::uint64_t seed = stage_seed(ctx.cfg.seed, "field");
  Rng rng(seed);
  const arma::mat truth = simulate_one(sim, x);
  const arma::uword S = truth.n_rows, T = truth.n_cols;
  arma::mat rows(S * T, 4);
  arma::uword r = 0;
  for (arma::uword t = 0; t < T; ++t) {
    for (arma::uword s = 0; s < S; ++s) {
      const double z = truth(s, t) + sim.noise_sd * rng.normal();
      rows.row(r++) = arma::rowvec{double(t), double(s), z, truth(s, t)};
    }
  }
  write_table(ctx.path("field.csv"), {"t", "location_id", "value", "truth"}, rows);
  std::vector<std::string> header = numbered("x_", x.n_elem);
  for (const auto& h : numbered("u_", x.n_elem)) header.push_back(h);
  write_table(ctx.path("holdout.csv"), header, arma::join_rows(x.t(), u.t()));
  StageRecord rec = record(ctx, "field", seed, started);
  rec.files = {"field.csv", "holdout.csv"};
  rec.metrics["noise_sd"] = sim.noise_sd;
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

Ensemble read_ensemble(const Context& ctx) {
  verify_manifest(ctx.out, "simulate");
  const Table runs = read_table(ctx.path("runs.csv"));
  const arma::uword d = ctx.cfg.design.dims, N = runs.data.n_rows;
  if (runs.data.n_cols != 1 + 2 * d) throw ValidationError("runs.csv does not match design.dims");
  Ensemble ens;
  ens.X = runs.data.cols(d + 1, 2 * d);
  const auto& sim = ctx.cfg.simulator;
  if (sim.kind == SimKind::Network) {
    ens.domain.adjacency = read_table(ctx.path("adjacency.csv")).data;
  } else {
    ens.domain.coords = read_table(ctx.path("locations.csv")).data;
  }
  const Table yl = read_table(ctx.path("ensemble.csv"));
  const arma::uword S = ens.domain.size();
  const arma::uword T = N * S == 0 ? 0 : yl.data.n_rows / (N * S);
  ens.Y = long_to_cube(yl, N, S, T);
  ens.p = ctx.cfg.emulator.p;
  return ens;
}

void cmd_fit(const Context& ctx) {
  const std::string started = utc_now();
  const EmulatorMode mode = ctx.mode();
  const std::string stage = "fit_" + to_string(mode);
  Ensemble ens = read_ensemble(ctx);
  const OutputTransform tr = OutputTransform::fit(ens.Y, ctx.cfg.emulator.per_location_scaling);
  ens.Y = tr.apply(ens.Y);
  const std::uint64_t seed = stage_seed(ctx.cfg.seed, stage);
  EmulatorConfig ecfg = emulator_config(ctx.cfg, mode, seed, ctx.workers);
  if (mode == EmulatorMode::PredictiveProcess) ecfg.knots = grid_knots(ens.domain.coords, ctx.cfg.emulator.knots);
  const EmulatorFit fit = fit_emulator(ens, ecfg);
  std::vector<std::string> files = save_fit(ctx.path(stage), fit, tr);
  for (auto& f : files) f = stage + "/" + f;
  StageRecord rec = record(ctx, stage, seed, started);
  rec.files = files;
  double ab = 0.0, ao = 0.0;
  for (const auto& part : fit.parts) {
    ab += part.accept_beta;
    ao += part.accept_omega;
  }
  rec.metrics["accept_beta"] = ab / double(fit.parts.size());
  rec.metrics["accept_omega"] = ao / double(fit.parts.size());
  rec.metrics["n_draws"] = double(fit.n_draws());
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

struct Loaded {
  EmulatorFit fit;
  OutputTransform tr;
  arma::mat z_raw;  // S x T
};

Loaded load_fit_and_field(const Context& ctx, EmulatorMode mode) {
  const std::string stage = "fit_" + to_string(mode);
  verify_manifest(ctx.out, stage);
  verify_manifest(ctx.out, "field");
  Loaded l;
  l.fit = load_fit(ctx.path(stage), l.tr);
  l.z_raw = field_matrix(read_table(ctx.path("field.csv")), l.fit.S(), l.fit.Y.n_slices);
  return l;
}

void cmd_calibrate(const Context& ctx) {
  const std::string started = utc_now();
  const EmulatorMode mode = ctx.mode();
  const std::string stage = "calibrate_" + to_string(mode);
  const Loaded l = load_fit_and_field(ctx, mode);
  const std::uint64_t seed = ctx.cfg.calibration.seed ? *ctx.cfg.calibration.seed : stage_seed(ctx.cfg.seed, stage);
  const CalibrationDraws draws = calibrate(l.tr.apply(l.z_raw), l.fit, calibration_config(ctx.cfg, seed));
  std::vector<std::string> files = save_calibration(ctx.path(stage), draws, l.fit.S());
  for (auto& f : files) f = stage + "/" + f;
  StageRecord rec = record(ctx, stage, seed, started);
  rec.files = files;
  rec.metrics["accept_eta"] = draws.accept_eta;
  rec.metrics["accept_rho"] = draws.accept_rho;
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

void cmd_predict(const Context& ctx) {
  const std::string started = utc_now();
  const EmulatorMode mode = ctx.mode();
  const std::string m = to_string(mode), stage = "predict_" + m;
  verify_manifest(ctx.out, "calibrate_" + m);
  const Loaded l = load_fit_and_field(ctx, mode);
  const CalibrationDraws draws = load_calibration(ctx.path("calibrate_" + m));
  const std::uint64_t seed = stage_seed(ctx.cfg.seed, stage);
  Rng rng(seed);
  const ReplicateMoments rep = posterior_replicates(draws, l.fit, l.tr.apply(l.z_raw), rng);
  const arma::uword S = l.fit.S(), K = l.fit.K(), p = l.fit.p;
  arma::mat rows(S * K, 4);
  arma::uword r = 0;
  for (arma::uword k = 0; k < K; ++k) {
    for (arma::uword s = 0; s < S; ++s) {
      rows.row(r++) = arma::rowvec{double(p + k), double(s), l.tr.center[s] + l.tr.scale[s] * rep.mean(s, k),
                                   l.tr.scale[s] * rep.sd(s, k)};
    }
  }
  const std::string file = "replicates_" + m + ".csv";
  write_table(ctx.path(file), {"t", "location_id", "mu_rep", "sigma_rep"}, rows);
  StageRecord rec = record(ctx, stage, seed, started);
  rec.files = {file};
  rec.metrics["n_samples"] = double(draws.size());
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

void cmd_score(const Context& ctx) {
  const std::string started = utc_now();
  verify_manifest(ctx.out, "field");
  verify_manifest(ctx.out, "simulate");
  const Table field = read_table(ctx.path("field.csv"));
  const double n_runs = read_table(ctx.path("runs.csv")).data.n_rows;
  std::vector<EmulatorMode> modes;
  if (ctx.mode_flag) {
    modes.push_back(parse_mode(*ctx.mode_flag));
  } else {
    for (auto m : {EmulatorMode::Heterogeneous, EmulatorMode::Spatial, EmulatorMode::PredictiveProcess}) {
      if (fs::exists(ctx.path("manifest_predict_" + to_string(m) + ".json"))) modes.push_back(m);
    }
  }
  if (modes.empty()) throw ValidationError("no predictions to score; run predict first");
  std::string text = "model,GRS,RMSE,n_runs\n";
  for (auto m : modes) {
    const std::string name = to_string(m);
    verify_manifest(ctx.out, "predict_" + name);
    const Table rep = read_table(ctx.path("replicates_" + name + ".csv"));
    const arma::uword ct = rep.column("t"), cs = rep.column("location_id");
    const arma::uword n = rep.data.n_rows;
    const arma::uword S = arma::uword(arma::max(field.data.col(field.column("location_id")))) + 1;
    const arma::uword T = arma::uword(arma::max(field.data.col(field.column("t")))) + 1;
    const arma::mat zall = field_matrix(field, S, T);
    arma::vec z(n), mu = rep.data.col(rep.column("mu_rep")), sd = rep.data.col(rep.column("sigma_rep"));
    for (arma::uword i = 0; i < n; ++i) z[i] = zall(arma::uword(rep.data(i, cs)), arma::uword(rep.data(i, ct)));
    text += name + "," + format_double(grs(z, mu, sd)) + "," + format_double(rmse(z, mu)) + "," +
            std::to_string(static_cast<long long>(n_runs)) + "\n";
  }
  atomic_write(ctx.path("scores.csv"), text);
  StageRecord rec = record(ctx, "score", 0, started);
  rec.files = {"scores.csv"};
  rec.finished = utc_now();
  write_manifest(ctx.out, rec);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spatiotemporal emulation and calibration pipeline", "ssgp"};
  app.require_subcommand(1, 1);
  Options opt;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out, mode;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory (overrides io.out)");
    sub->add_option("--mode", mode, "emulator mode: spatial, heterogeneous or predictive_process");
  };
  for (const char* name : {"design", "simulate", "field", "fit", "calibrate", "predict", "score"}) {
    add_common(app.add_subcommand(name, std::string("run the ") + name + " stage"));
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  CLI::App* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--workers")) opt.workers = workers;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--mode")) opt.mode = mode;

  try {
    Context ctx;
    ctx.cfg = load_config(opt.config_path);
    if (opt.seed) ctx.cfg.seed = *opt.seed;
    ctx.out = opt.out ? *opt.out : ctx.cfg.out;
    ctx.workers = opt.workers ? *opt.workers : default_workers();
    ctx.mode_flag = opt.mode;
    if (ctx.mode_flag) parse_mode(*ctx.mode_flag);
    fs::create_directories(ctx.out);
    if (opt.command == "design") cmd_design(ctx);
    else if (opt.command == "simulate") cmd_simulate(ctx);
    else if (opt.command == "field") cmd_field(ctx);
    else if (opt.command == "fit") cmd_fit(ctx);
    else if (opt.command == "calibrate") cmd_calibrate(ctx);
    else if (opt.command == "predict") cmd_predict(ctx);
    else cmd_score(ctx);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cli
}  // namespace ssgp
