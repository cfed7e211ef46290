#include "ssgp/store.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "ssgp/csv.hpp"
#include "ssgp/errors.hpp"

namespace ssgp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (unsigned i = 0; i < n; ++i) {
    out[2 * i] = digits[d[i] >> 4];
    out[2 * i + 1] = digits[d[i] & 15];
  }
  return out;
}

void sha256_raw(const std::string& data, unsigned char* md, unsigned* len) {
  if (!EVP_Digest(data.data(), data.size(), md, len, EVP_sha256(), nullptr)) {
    throw NumericError("sha256 digest failed");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing input file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<std::string> numbered(const std::string& stem, arma::uword n, arma::uword from = 1) {
  std::vector<std::string> out;
  for (arma::uword i = 0; i < n; ++i) out.push_back(stem + std::to_string(i + from));
  return out;
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  sha256_raw(data, md, &len);
  return hex(md, len);
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

std::uint64_t stage_seed(std::uint64_t master, const std::string& stage) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  sha256_raw(std::to_string(master) + ":" + stage, md, &len);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | md[i];
  return out;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& dir, const StageRecord& rec) {
  json j;
  j["stage"] = rec.stage;
  j["config_hash"] = rec.config_hash;
  j["master_seed"] = rec.master_seed;
  j["stage_seed"] = rec.stage_seed;
  j["version"] = SSGP_VERSION;
  j["started"] = rec.started;
  j["finished"] = rec.finished;
  j["metrics"] = rec.metrics;
  json files = json::object();
  for (const auto& f : rec.files) files[f] = sha256_file(join(dir, f));
  j["files"] = files;
  atomic_write(join(dir, "manifest_" + rec.stage + ".json"), j.dump(2) + "\n");
}

void verify_manifest(const std::string& dir, const std::string& stage) {
  const std::string path = join(dir, "manifest_" + stage + ".json");
  if (!fs::exists(path)) throw ValidationError("stage '" + stage + "' has not been run (missing " + path + ")");
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception&) {
    throw ValidationError("corrupt manifest " + path);
  }
  for (const auto& [name, sum] : j.at("files").items()) {
    const std::string f = join(dir, name);
    if (!fs::exists(f)) throw ValidationError("stage '" + stage + "' output missing: " + f);
    if (sha256_file(f) != sum.get<std::string>()) {
      throw ValidationError("stage '" + stage + "' output changed since it was written: " + f);
    }
  }
}

std::vector<std::string> save_fit(const std::string& dir, const EmulatorFit& fit, const OutputTransform& tr) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  const arma::uword N = fit.X.n_rows, d = fit.X.n_cols, S = fit.S(), T = fit.Y.n_slices, K = fit.K(), p = fit.p;
  const std::size_t n_draws = fit.n_draws();

  json meta;
  meta["mode"] = to_string(fit.mode);
  meta["p"] = p;
  meta["N"] = N;
  meta["S"] = S;
  meta["T"] = T;
  meta["d"] = d;
  meta["n_draws"] = n_draws;
  meta["network"] = fit.domain.is_network();
  meta["knot_placement"] = fit.knots.placement;
  json parts = json::array();
  for (const auto& part : fit.parts) {
    json pj;
    pj["locations"] = arma::conv_to<std::vector<arma::uword>>::from(part.locations);
    pj["accept_beta"] = part.accept_beta;
    pj["accept_omega"] = part.accept_omega;
    parts.push_back(pj);
  }
  meta["parts"] = parts;
  atomic_write(join(dir, "meta.json"), meta.dump(2) + "\n");
  files.push_back("meta.json");

  write_table(join(dir, "X.csv"), numbered("x", d), fit.X);
  files.push_back("X.csv");

  arma::mat ylong(N * S * T, 4);
  arma::uword r = 0;
  for (arma::uword i = 0; i < N; ++i)
    for (arma::uword t = 0; t < T; ++t)
      for (arma::uword s = 0; s < S; ++s) ylong.row(r++) = arma::rowvec{double(i), double(t), double(s), fit.Y(i, s, t)};
  write_table(join(dir, "Y.csv"), {"run_id", "t", "location_id", "value"}, ylong);
  files.push_back("Y.csv");

  if (fit.domain.is_network()) {
    write_table(join(dir, "adjacency.csv"), numbered("n", S, 0), fit.domain.adjacency);
    files.push_back("adjacency.csv");
  } else {
    write_table(join(dir, "domain.csv"), numbered("c", fit.domain.coords.n_cols), fit.domain.coords);
    files.push_back("domain.csv");
  }
  if (!fit.knots.knots.is_empty()) {
    write_table(join(dir, "knots.csv"), numbered("c", fit.knots.knots.n_cols), fit.knots.knots);
    files.push_back("knots.csv");
  }
  write_table(join(dir, "m0.csv"), {"m0"}, fit.m0);
  files.push_back("m0.csv");
  write_table(join(dir, "transform.csv"), {"center", "scale"}, arma::join_rows(tr.center, tr.scale));
  files.push_back("transform.csv");

  // per-part draws, stacked with a leading part column and zero padding to the widest part
  arma::uword qmax = 0, rmax = 0;
  for (const auto& part : fit.parts) {
    qmax = std::max<arma::uword>(qmax, part.locations.n_elem * p);
    rmax = std::max<arma::uword>(rmax, part.omega_sp.n_cols);
  }
  const std::size_t P = fit.parts.size();
  arma::mat theta(P * n_draws * (K + 1), 3 + qmax, arma::fill::zeros);
  arma::mat scal(P * n_draws, 2 + (K + 1) + d + rmax + p * p, arma::fill::zeros);
  r = 0;
  arma::uword r2 = 0;
  for (std::size_t j = 0; j < P; ++j) {
    const auto& part = fit.parts[j];
    for (std::size_t i = 0; i < n_draws; ++i) {
      const arma::mat& th = part.theta[i];
      for (arma::uword k = 0; k <= K; ++k) {
        theta(r, 0) = double(j);
        theta(r, 1) = double(i);
        theta(r, 2) = double(k);
        theta.row(r).cols(3, 2 + th.n_rows) = th.col(k).t();
        ++r;
      }
      arma::rowvec row(scal.n_cols, arma::fill::zeros);
      row[0] = double(j);
      row[1] = double(i);
      arma::uword c = 2;
      row.cols(c, c + K) = part.v.row(i);
      c += K + 1;
      row.cols(c, c + d - 1) = part.beta.row(i);
      c += d;
      if (part.omega_sp.n_cols) row.cols(c, c + part.omega_sp.n_cols - 1) = part.omega_sp.row(i);
      c += rmax;
      row.cols(c, c + p * p - 1) = arma::vectorise(part.h_T[i]).t();
      scal.row(r2++) = row;
    }
  }
  write_table(join(dir, "theta.csv"), cat({"part", "sample", "k"}, numbered("theta_", qmax)), theta);
  files.push_back("theta.csv");
  write_table(join(dir, "params.csv"),
              cat(cat(cat(cat({"part", "sample"}, numbered("v_", K + 1, 0)), numbered("beta_", d)),
                      numbered("omega_", rmax)),
                  numbered("hT_", p * p)),
              scal);
  files.push_back("params.csv");
  return files;
}

EmulatorFit load_fit(const std::string& dir, OutputTransform& tr) {
  json meta;
  try {
    meta = json::parse(read_text(join(dir, "meta.json")));
  } catch (const json::exception&) {
    throw ValidationError("corrupt emulator metadata in " + dir);
  }
  EmulatorFit fit;
  fit.mode = parse_mode(meta.at("mode").get<std::string>());
  fit.p = meta.at("p").get<arma::uword>();
  const arma::uword N = meta.at("N"), S = meta.at("S"), T = meta.at("T"), d = meta.at("d");
  const std::size_t n_draws = meta.at("n_draws");
  const arma::uword p = fit.p, K = T - p;
  fit.X = read_table(join(dir, "X.csv")).data;
  if (fit.X.n_rows != N || fit.X.n_cols != d) throw ValidationError("X.csv does not match meta.json");
  const arma::mat ylong = read_table(join(dir, "Y.csv")).data;
  if (ylong.n_rows != N * S * T) throw ValidationError("Y.csv does not match meta.json");
  fit.Y.set_size(N, S, T);
  for (arma::uword r = 0; r < ylong.n_rows; ++r) {
    fit.Y(arma::uword(ylong(r, 0)), arma::uword(ylong(r, 2)), arma::uword(ylong(r, 1))) = ylong(r, 3);
  }
  if (meta.at("network").get<bool>()) {
    fit.domain.adjacency = read_table(join(dir, "adjacency.csv")).data;
  } else {
    fit.domain.coords = read_table(join(dir, "domain.csv")).data;
  }
  if (fs::exists(join(dir, "knots.csv"))) fit.knots.knots = read_table(join(dir, "knots.csv")).data;
  fit.knots.placement = meta.value("knot_placement", std::string("grid"));
  fit.m0 = read_table(join(dir, "m0.csv")).data.col(0);
  const arma::mat trm = read_table(join(dir, "transform.csv")).data;
  tr.center = trm.col(0);
  tr.scale = trm.col(1);

  const arma::mat theta = read_table(join(dir, "theta.csv")).data;
  const arma::mat scal = read_table(join(dir, "params.csv")).data;
  const auto& parts = meta.at("parts");
  const std::size_t P = parts.size();
  if (theta.n_rows != P * n_draws * (K + 1) || scal.n_rows != P * n_draws) {
    throw ValidationError("emulator draw tables do not match meta.json");
  }
  const arma::uword rmax = scal.n_cols - 2 - (K + 1) - d - p * p;
  const arma::uword range_dim = fit.domain.range_dim();
  arma::uword r = 0, r2 = 0;
  for (std::size_t j = 0; j < P; ++j) {
    EmulatorDraws part;
    part.locations = arma::conv_to<arma::uvec>::from(parts[j].at("locations").get<std::vector<arma::uword>>());
    part.accept_beta = parts[j].at("accept_beta");
    part.accept_omega = parts[j].at("accept_omega");
    const arma::uword q = part.locations.n_elem * p;
    const bool has_range = fit.mode != EmulatorMode::Heterogeneous && range_dim > 0 && rmax > 0;
    part.v.set_size(n_draws, K + 1);
    part.beta.set_size(n_draws, d);
    part.omega_sp.set_size(n_draws, has_range ? range_dim : 0);
    for (std::size_t i = 0; i < n_draws; ++i) {
      arma::mat th(q, K + 1);
      for (arma::uword k = 0; k <= K; ++k) th.col(k) = theta.row(r++).cols(3, 2 + q).t();
      part.theta.push_back(std::move(th));
      const arma::rowvec row = scal.row(r2++);
      arma::uword c = 2;
      part.v.row(i) = row.cols(c, c + K);
      c += K + 1;
      part.beta.row(i) = row.cols(c, c + d - 1);
      c += d;
      if (has_range) part.omega_sp.row(i) = row.cols(c, c + range_dim - 1);
      c += rmax;
      part.h_T.push_back(arma::reshape(row.cols(c, c + p * p - 1), p, p));
    }
    fit.parts.push_back(std::move(part));
  }
  return fit;
}

std::vector<std::string> save_calibration(const std::string& dir, const CalibrationDraws& draws, arma::uword S) {
  fs::create_directories(dir);
  const std::size_t n = draws.size();
  const arma::vec idx = arma::regspace(0.0, double(n) - 1.0);
  const arma::uword K1 = draws.nu.n_cols;
  std::vector<std::string> files;
  write_table(join(dir, "eta.csv"), cat({"sample"}, numbered("eta_", draws.eta.n_cols)), arma::join_rows(idx, draws.eta));
  write_table(join(dir, "rho.csv"), cat({"sample"}, numbered("rho_", draws.rho.n_cols)), arma::join_rows(idx, draws.rho));
  write_table(join(dir, "nu.csv"), cat({"sample"}, numbered("nu_", K1, 0)), arma::join_rows(idx, draws.nu));
  write_table(join(dir, "emu_index.csv"), {"sample", "emu_index"},
              arma::join_rows(idx, arma::conv_to<arma::vec>::from(draws.emu_index)));
  arma::mat u(n * K1, 2 + S);
  arma::uword r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (arma::uword k = 0; k < K1; ++k) {
      u(r, 0) = double(i);
      u(r, 1) = double(k);
      u.row(r).cols(2, 1 + S) = draws.u[i].col(k).t();
      ++r;
    }
  }
  write_table(join(dir, "u.csv"), cat({"sample", "k"}, numbered("u_", S, 0)), u);
  json meta;
  meta["accept_eta"] = draws.accept_eta;
  meta["accept_rho"] = draws.accept_rho;
  meta["n_samples"] = n;
  atomic_write(join(dir, "meta.json"), meta.dump(2) + "\n");
  for (const char* f : {"eta.csv", "rho.csv", "nu.csv", "emu_index.csv", "u.csv", "meta.json"}) files.push_back(f);
  return files;
}

CalibrationDraws load_calibration(const std::string& dir) {
  CalibrationDraws out;
  const arma::mat eta = read_table(join(dir, "eta.csv")).data;
  const arma::mat rho = read_table(join(dir, "rho.csv")).data;
  const arma::mat nu = read_table(join(dir, "nu.csv")).data;
  const arma::mat ei = read_table(join(dir, "emu_index.csv")).data;
  const arma::mat u = read_table(join(dir, "u.csv")).data;
  const arma::uword n = eta.n_rows, K1 = nu.n_cols - 1, S = u.n_cols - 2;
  if (rho.n_rows != n || nu.n_rows != n || ei.n_rows != n || u.n_rows != n * K1) {
    throw ValidationError("calibration tables in " + dir + " disagree on the sample count");
  }
  out.eta = eta.cols(1, eta.n_cols - 1);
  out.rho = rho.n_cols > 1 ? arma::mat(rho.cols(1, rho.n_cols - 1)) : arma::mat(n, 0);
  out.nu = nu.cols(1, nu.n_cols - 1);
  out.emu_index = arma::conv_to<arma::uvec>::from(ei.col(1));
  arma::uword r = 0;
  for (arma::uword i = 0; i < n; ++i) {
    arma::mat ui(S, K1);
    for (arma::uword k = 0; k < K1; ++k) ui.col(k) = u.row(r++).cols(2, 1 + S).t();
    out.u.push_back(std::move(ui));
  }
  json meta = json::parse(read_text(join(dir, "meta.json")));
  out.accept_eta = meta.at("accept_eta");
  out.accept_rho = meta.at("accept_rho");
  return out;
}

}  // namespace ssgp
