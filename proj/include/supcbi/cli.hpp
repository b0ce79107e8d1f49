#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "supcbi/moments.hpp"

namespace supcbi::cli {

using Json = nlohmann::ordered_json;

// Parameter files use unit-suffixed keys; B is derived from D and stored read-only.
// D is kept as given so that a written file reloads to the same bytes.
struct ParamsFile {
  double A = 0;
  double b = 0;
  double alpha = 0;
  double eta = 0;
  double beta = 0;
  double xmin = 0;
  double D = 1;

  SupCbiParams model() const;
};

ParamsFile params_file_from(const SupCbiParams& p, double D);
ParamsFile params_from_json(const Json& j);
Json params_to_json(const ParamsFile& p);
// Accepts a bare parameter object or any report carrying one under "params".
ParamsFile load_params_file(const std::string& path);

struct RunConfig {
  std::string command;
  std::string input;
  double interval_h = 1.0;
  std::optional<ParamsFile> params;
  std::optional<double> D;
  std::optional<double> xmin;
  double dt_h = 0.01;
  double years = 200.0;
  double burn_in_years = 5.0;
  std::optional<std::uint64_t> seed;
  std::vector<double> thresholds = {5, 20, 50, 100};
  int max_lag_h = 200;
  int replicates = 1;
  std::int64_t dump_stride = 0;  // 0: no path dump

  // not part of the embedded configuration
  std::string out_dir = ".";
  int workers = 1;

  void validate() const;
  Json to_json() const;
  static RunConfig from_json(const Json& j);
};

struct CommandResult {
  Json report;
  int exit_code = 0;
};

CommandResult cmd_stats(const RunConfig& cfg);
CommandResult cmd_fit(const RunConfig& cfg);
CommandResult cmd_moments(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_reduce(const RunConfig& cfg);

// Dispatches on cfg.command and writes the report into cfg.out_dir.
CommandResult run_command(const RunConfig& cfg);

// Exit codes: 0 success, 1 usage/config, 2 data, 3 numeric/optimizer, 4 validation failure.
int exit_code_for_current_exception();

int run_cli(int argc, char** argv);

}  // namespace supcbi::cli
