#pragma once

// Configuration ingestion, CSV serialization, and the command entry points
// used by the nhreduce executable.

#include <string>
#include <vector>

#include "nhreduce/dldps.hpp"

namespace nhreduce::cli {

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error("schema: " + msg) {}
};

// Exit codes shared by the commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCompareFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitVerifyFail = 4;

struct RunConfig {
  std::string system;  // "suslov" | "particle"
  std::string level;   // full | eta | momentum | h_reduced | g_reduced | gh_reduced

  // suslov
  double inertia[5] = {1.0, 2.0, 3.0, 0.0, 0.0};  // I11, I22, I33, I13, I23
  double omega0[2] = {0.2, 0.1};                  // W0 = cay(hat((w1, w2, 0)))
  std::vector<double> g0;                         // row-major 3x3, default identity
  double connection_h[3] = {0.0, 0.0, 0.0};       // h = cay(hat(.)), default e

  // particle
  double h_step = 0.1;
  double q0[3] = {0.0, 1.0, 0.0};
  double dq0[2] = {0.1, 0.05};

  // common
  int steps = 200;
  double newton_tol = 1e-12;
  int max_iter = 50;
  double verify_tol = 1e-9;
};

RunConfig load_config_file(const std::string& path);

/// Built system with its initial pair and CSV schema.
struct LevelSetup {
  DldpsSystem system;
  PathPair initial;
  std::vector<std::string> columns;
  bool point_rows = false;  // identity bundles serialize points, others pairs
};

LevelSetup build_setup(const RunConfig& config);

std::string to_csv(const DiscretePath& path, const LevelSetup& setup);
void write_csv(const std::string& path, const DiscretePath& traj, const LevelSetup& setup);
DiscretePath read_csv(const std::string& path, const LevelSetup& setup);

/// True when NHREDUCE_LOG requests at least the given verbosity level.
bool log_enabled(int level);

int cmd_simulate(const std::string& config_path, const std::string& out_path);
int cmd_check(const std::string& config_path, const std::string& csv_path);
int cmd_compare(const std::string& config_path, const std::string& full_csv,
                const std::string& reduced_csv, const std::string& mode, double tol);
/// Runs every entry of a JSON array config concurrently; outputs go to
/// out_prefix_<index>.csv.
int cmd_sweep(const std::string& config_path, const std::string& out_prefix);

}  // namespace nhreduce::cli
