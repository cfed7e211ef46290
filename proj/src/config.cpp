#include "ssgp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ssgp/errors.hpp"

extern char** environ;

namespace ssgp {

using nlohmann::json;

std::string to_string(SimKind k) {
  switch (k) {
    case SimKind::Lv: return "lv";
    case SimKind::SirPde: return "sir_pde";
    case SimKind::Network: return "network";
  }
  return "lv";
}

arma::uword input_dims(SimKind k) {
  switch (k) {
    case SimKind::Lv: return 4;       // eta1..eta4
    case SimKind::SirPde: return 3;   // eta1, eta2, alpha2
    case SimKind::Network: return 2;  // r, d
  }
  return 0;
}

namespace {

SimKind parse_kind(const std::string& s) {
  if (s == "lv") return SimKind::Lv;
  if (s == "sir_pde") return SimKind::SirPde;
  if (s == "network") return SimKind::Network;
  throw ValidationError("simulator.kind must be lv, sir_pde or network (got '" + s + "')");
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + " has the wrong type");
  }
}

void read_u(const json& obj, const std::string& where, const char* key, arma::uword& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError(where + "." + key + " must be a non-negative integer");
  out = v.get<arma::uword>();
}

void read_i(const json& obj, const std::string& where, const char* key, int& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(where + "." + key + " must be an integer");
  out = v.get<int>();
}

void read_seed(const json& obj, const std::string& where, const char* key, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ValidationError(where + "." + key + " must be a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

arma::vec read_vec(const json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + " must be an array of numbers");
  arma::vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ValidationError(what + " must be an array of numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

arma::mat default_bounds(SimKind k) {
  switch (k) {
    case SimKind::Lv: return {{0.5, 1.5}, {0.02, 0.08}, {0.5, 1.5}, {0.02, 0.08}};
    case SimKind::SirPde: return {{0.3, 0.8}, {0.05, 0.2}, {0.05, 0.5}};
    case SimKind::Network: return {{0.2, 0.8}, {0.0, 0.3}};
  }
  return {};
}

arma::vec default_holdout(SimKind k) {
  switch (k) {
    case SimKind::Lv: return {0.95, 0.045, 1.05, 0.055};
    case SimKind::SirPde: return {0.55, 0.12, 0.25};
    case SimKind::Network: return {0.47, 0.13};
  }
  return {};
}

void apply_overrides(json& doc, const std::map<std::string, std::string>& env) {
  static const std::string prefix = "SSGP_";
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string rest = name.substr(prefix.size());
    std::transform(rest.begin(), rest.end(), rest.begin(), [](unsigned char c) { return std::tolower(c); });
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;
    }
    const auto sep = rest.find("__");
    if (sep == std::string::npos) {
      doc[rest] = parsed;
    } else {
      const std::string section = rest.substr(0, sep), key = rest.substr(sep + 2);
      if (section.empty() || key.empty()) throw ValidationError("malformed override " + name);
      if (!doc.contains(section)) doc[section] = json::object();
      doc[section][key] = parsed;
    }
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text, const std::map<std::string, std::string>& env) {
  json doc;
  try {
    doc = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  apply_overrides(doc, env);
  reject_unknown(doc, "config", {"seed", "design", "simulator", "emulator", "calibration", "io"});

  PipelineConfig cfg;
  read_seed(doc, "config", "seed", cfg.seed);
  const json empty = json::object();
  const json& jd = doc.contains("design") ? doc["design"] : empty;
  const json& js = doc.contains("simulator") ? doc["simulator"] : empty;
  const json& je = doc.contains("emulator") ? doc["emulator"] : empty;
  const json& jc = doc.contains("calibration") ? doc["calibration"] : empty;
  const json& jio = doc.contains("io") ? doc["io"] : empty;

  // simulator first: it sets the design defaults
  auto& sim = cfg.simulator;
  std::string kind = "lv";
  if (js.is_object()) read(js, "simulator", "kind", kind);
  sim.kind = parse_kind(kind);
  std::set<std::string> sim_keys{"kind", "holdout", "noise_sd"};
  switch (sim.kind) {
    case SimKind::Lv: sim_keys.insert({"u0", "v0", "dt", "n_steps", "record_every"}); break;
    case SimKind::SirPde:
      sim_keys.insert({"grid", "ds", "dt", "n_pop", "seeds", "initial_infected", "n_steps", "record_every"});
      break;
    case SimKind::Network:
      sim_keys.insert({"nodes", "edge_prob", "graph_seed", "T", "initial_nodes", "initial_value"});
      break;
  }
  reject_unknown(js, "simulator", sim_keys);
  sim.holdout = js.contains("holdout") ? read_vec(js["holdout"], "simulator.holdout") : default_holdout(sim.kind);
  read(js, "simulator", "noise_sd", sim.noise_sd);
  if (sim.kind == SimKind::Lv) {
    // 21 outputs over six time units, about one predator-prey cycle
    sim.lv.n_steps = 600;
    sim.lv.record_every = 30;
    read(js, "simulator", "u0", sim.lv.u0);
    read(js, "simulator", "v0", sim.lv.v0);
    read(js, "simulator", "dt", sim.lv.dt);
    read_u(js, "simulator", "n_steps", sim.lv.n_steps);
    read_u(js, "simulator", "record_every", sim.lv.record_every);
  } else if (sim.kind == SimKind::SirPde) {
    auto& p = sim.pde;
    p.n = 12;
    p.dt = 0.1;
    p.n_steps = 290;
    p.record_every = 10;
    read_u(js, "simulator", "grid", p.n);
    read(js, "simulator", "ds", p.ds);
    read(js, "simulator", "dt", p.dt);
    read(js, "simulator", "n_pop", p.N_pop);
    read(js, "simulator", "initial_infected", p.initial_infected);
    read_u(js, "simulator", "n_steps", p.n_steps);
    read_u(js, "simulator", "record_every", p.record_every);
    if (js.contains("seeds")) {
      const arma::vec s = read_vec(js["seeds"], "simulator.seeds");
      p.seeds = arma::conv_to<arma::uvec>::from(s);
    } else {
      p.seeds = {3 * p.n + 3, (2 * p.n / 3) * p.n + 2 * p.n / 3};
    }
    sim.noise_sd = js.contains("noise_sd") ? sim.noise_sd : 1.0;
  } else {
    read_u(js, "simulator", "nodes", sim.nodes);
    read(js, "simulator", "edge_prob", sim.edge_prob);
    read_seed(js, "simulator", "graph_seed", sim.graph_seed);
    read_u(js, "simulator", "T", sim.net_T);
    if (js.contains("initial_nodes")) {
      const arma::vec v = read_vec(js["initial_nodes"], "simulator.initial_nodes");
      if (arma::any(v < 0.0) || arma::any(v != arma::floor(v))) {
        throw ValidationError("simulator.initial_nodes must hold node indices");
      }
      sim.initial_nodes = arma::conv_to<arma::uvec>::from(v);
    }
    read(js, "simulator", "initial_value", sim.initial_value);
    if (!js.contains("noise_sd")) sim.noise_sd = 0.1;
  }

  auto& des = cfg.design;
  reject_unknown(jd, "design", {"n_runs", "dims", "bounds", "midpoint", "seed"});
  des.dims = input_dims(sim.kind);
  des.n_runs = sim.kind == SimKind::Lv ? 50 : 25;
  read_u(jd, "design", "n_runs", des.n_runs);
  read_u(jd, "design", "dims", des.dims);
  read(jd, "design", "midpoint", des.midpoint);
  if (jd.contains("seed")) {
    std::uint64_t s = 0;
    read_seed(jd, "design", "seed", s);
    des.seed = s;
  }
  if (jd.contains("bounds")) {
    const json& b = jd["bounds"];
    if (!b.is_array()) throw ValidationError("design.bounds must be an array of [lo, hi] pairs");
    des.bounds.set_size(b.size(), 2);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const arma::vec pair = read_vec(b[i], "design.bounds entry");
      if (pair.n_elem != 2) throw ValidationError("design.bounds entries must be [lo, hi] pairs");
      des.bounds.row(i) = pair.t();
    }
  } else {
    des.bounds = default_bounds(sim.kind);
  }

  auto& em = cfg.emulator;
  reject_unknown(je, "emulator", {"mode", "omega", "p", "n_samples", "burn_in", "thin", "eps1", "eps2", "knots",
                                  "per_location_scaling", "het_discount", "update_T", "smoother"});
  // one scale for gridded and network outputs keeps the field noise homogeneous across locations
  em.per_location_scaling = sim.kind == SimKind::Lv;
  if (je.contains("mode")) {
    std::string m;
    read(je, "emulator", "mode", m);
    try {
      em.mode = parse_mode(m);
    } catch (const ArgumentError& e) {
      throw ValidationError(e.what());
    }
  }
  read(je, "emulator", "omega", em.omega);
  read_u(je, "emulator", "p", em.p);
  read_i(je, "emulator", "n_samples", em.n_samples);
  read_i(je, "emulator", "burn_in", em.burn_in);
  read_i(je, "emulator", "thin", em.thin);
  read(je, "emulator", "eps1", em.eps1);
  read(je, "emulator", "eps2", em.eps2);
  read_u(je, "emulator", "knots", em.knots);
  read(je, "emulator", "per_location_scaling", em.per_location_scaling);
  read(je, "emulator", "het_discount", em.het_discount);
  read(je, "emulator", "update_T", em.update_T);
  if (je.contains("smoother")) {
    std::string sm;
    read(je, "emulator", "smoother", sm);
    if (sm == "conditional") em.smoother = Smoother::Conditional;
    else if (sm == "literal") em.smoother = Smoother::Literal;
    else throw ValidationError("emulator.smoother must be conditional or literal (got '" + sm + "')");
  }

  auto& ca = cfg.calibration;
  reject_unknown(jc, "calibration",
                 {"b", "eps3", "bias_enabled", "n_samples", "burn_in", "thin", "emulator_stride", "seed"});
  read(jc, "calibration", "b", ca.b);
  read(jc, "calibration", "eps3", ca.eps3);
  read(jc, "calibration", "bias_enabled", ca.bias_enabled);
  read_i(jc, "calibration", "n_samples", ca.n_samples);
  read_i(jc, "calibration", "burn_in", ca.burn_in);
  read_i(jc, "calibration", "thin", ca.thin);
  read_u(jc, "calibration", "emulator_stride", ca.emulator_stride);
  if (jc.contains("seed")) {
    std::uint64_t s = 0;
    read_seed(jc, "calibration", "seed", s);
    ca.seed = s;
  }

  reject_unknown(jio, "io", {"out"});
  read(jio, "io", "out", cfg.out);

  // validation
  if (des.n_runs < 2) throw ValidationError("design.n_runs must be at least 2");
  if (des.dims != input_dims(sim.kind)) {
    throw ValidationError("design.dims must be " + std::to_string(input_dims(sim.kind)) + " for simulator " + kind);
  }
  if (des.bounds.n_rows != des.dims) throw ValidationError("design.bounds needs one [lo, hi] pair per dimension");
  if (!des.bounds.is_finite() || arma::any(des.bounds.col(1) <= des.bounds.col(0))) {
    throw ValidationError("design.bounds need finite lo < hi");
  }
  if (sim.holdout.n_elem != des.dims) throw ValidationError("simulator.holdout needs one value per input");
  if (arma::any(sim.holdout <= des.bounds.col(0)) || arma::any(sim.holdout >= des.bounds.col(1))) {
    throw ValidationError("simulator.holdout must lie strictly inside design.bounds");
  }
  if (!(sim.noise_sd >= 0.0)) throw ValidationError("simulator.noise_sd must be non-negative");
  if (sim.kind == SimKind::Lv && (arma::any(des.bounds.col(0) < 0.0))) {
    throw ValidationError("design.bounds must be non-negative for lv");
  }
  if (sim.kind == SimKind::Network) {
    if (arma::any(des.bounds.col(0) < 0.0) || arma::any(des.bounds.col(1) > 1.0)) {
      throw ValidationError("network bounds for r and d must lie in [0, 1]");
    }
    if (sim.nodes < 2 || (!sim.initial_nodes.is_empty() && sim.initial_nodes.max() >= sim.nodes) || sim.net_T < 3) {
      throw ValidationError("network needs nodes >= 2, initial_nodes inside the graph and T >= 3");
    }
  }
  if (sim.kind == SimKind::SirPde && (sim.pde.n < 2 || (!sim.pde.seeds.is_empty() && sim.pde.seeds.max() >= sim.pde.n * sim.pde.n))) {
    throw ValidationError("sir_pde needs grid >= 2 and seeds inside the grid");
  }
  if (em.p < 1) throw ValidationError("emulator.p must be at least 1");
  if (!(em.omega > 0.0 && em.omega <= 1.0) || !(em.het_discount > 0.0 && em.het_discount <= 1.0)) {
    throw ValidationError("emulator discounts must lie in (0, 1]");
  }
  if (em.n_samples <= em.burn_in || em.burn_in < 0 || em.thin < 1) throw ValidationError("emulator sample counts are invalid");
  if (!(em.eps1 > 0.0) || !(em.eps2 > 0.0)) throw ValidationError("emulator step sizes must be positive");
  if (em.mode == EmulatorMode::PredictiveProcess && (em.knots < 1 || sim.kind == SimKind::Network)) {
    throw ValidationError("predictive_process mode needs knots >= 1 and a coordinate domain");
  }
  if (!(ca.b > 0.0 && ca.b <= 1.0) || !(ca.eps3 > 0.0)) throw ValidationError("calibration.b or eps3 out of range");
  if (ca.n_samples <= ca.burn_in || ca.burn_in < 0 || ca.thin < 1) throw ValidationError("calibration sample counts are invalid");
  if (ca.emulator_stride < 1) throw ValidationError("calibration.emulator_stride must be at least 1");
  if (cfg.out.empty()) throw ValidationError("io.out must not be empty");

  cfg.canonical = doc.dump();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, environment_overrides());
}

std::map<std::string, std::string> environment_overrides() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind("SSGP_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    out[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return out;
}

EmulatorConfig emulator_config(const PipelineConfig& cfg, EmulatorMode mode, std::uint64_t seed, unsigned workers) {
  const auto& em = cfg.emulator;
  EmulatorConfig out;
  out.mode = mode;
  out.omega = em.omega;
  out.n_samples = em.n_samples;
  out.burn_in = em.burn_in;
  out.thin = em.thin;
  out.eps1 = em.eps1;
  out.eps2 = em.eps2;
  out.het_discount = em.het_discount;
  out.update_T = em.update_T;
  out.smoother = em.smoother;
  out.seed = seed;
  out.workers = workers;
  return out;
}

CalibConfig calibration_config(const PipelineConfig& cfg, std::uint64_t seed) {
  const auto& ca = cfg.calibration;
  CalibConfig out;
  out.b = ca.b;
  out.eps3 = ca.eps3;
  out.bias_enabled = ca.bias_enabled;
  out.n_samples = ca.n_samples;
  out.burn_in = ca.burn_in;
  out.thin = ca.thin;
  out.emulator_stride = ca.emulator_stride;
  out.seed = seed;
  return out;
}

}  // namespace ssgp
