#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssgp/calibrator.hpp"
#include "ssgp/emulator.hpp"

namespace ssgp {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// First 8 bytes (big-endian) of SHA-256("<master>:<stage>").
std::uint64_t stage_seed(std::uint64_t master, const std::string& stage);

struct StageRecord {
  std::string stage;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::uint64_t stage_seed = 0;
  std::string started, finished;          // UTC, ISO 8601
  std::map<std::string, double> metrics;  // acceptance rates and the like
  std::vector<std::string> files;         // relative to the output directory
};

// Writes <dir>/manifest_<stage>.json atomically with a checksum per file.
void write_manifest(const std::string& dir, const StageRecord& rec);
// Checks that the manifest exists and every listed file still matches its checksum.
void verify_manifest(const std::string& dir, const std::string& stage);

std::string utc_now();

// Emulator draw store: a directory of plain tables plus meta.json.
std::vector<std::string> save_fit(const std::string& dir, const EmulatorFit& fit, const OutputTransform& tr);
EmulatorFit load_fit(const std::string& dir, OutputTransform& tr);

std::vector<std::string> save_calibration(const std::string& dir, const CalibrationDraws& draws, arma::uword S);
CalibrationDraws load_calibration(const std::string& dir);

}  // namespace ssgp
