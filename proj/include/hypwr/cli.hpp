#pragma once

#include "hypwr/transport.hpp"
#include "hypwr/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hypwr {

struct RunConfig {
  std::string system_path;
  std::string command;  // check | classify | wr | symmetrize | transport | estimate
  int sphere_resolution = 64;
  std::vector<Real> gamma_ladder = {1.0, 2.0, 4.0, 8.0};
  std::uint64_t seed = 0;
  std::map<std::string, Real> tolerance_overrides;  // flat dotted keys
  std::string output_dir = ".";
  std::optional<Real> theta;   // fixture boundary-angle passthrough
  int jobs = 1;
  std::optional<Chart> chart;

  static RunConfig from_json_file(const std::string& path);
  void validate() const;
  Tols tolerances() const;
};

// Exit status: 0 success, 1 assumption/domain failure, 2 I/O or parse error.
int run(const RunConfig& config);

// Logging controlled by HYPWR_LOG in {error, info, debug}.
enum class LogLevel { Error = 0, Info = 1, Debug = 2 };
LogLevel log_level();
void log_line(LogLevel level, const std::string& msg);

}  // namespace hypwr
