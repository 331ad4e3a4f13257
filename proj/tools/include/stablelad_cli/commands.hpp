#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stablelad::cli {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::uint64_t seed = 12345;
  bool quiet = false;
};

// Exit codes: 0 success, 1 validation error, 2 estimation/simulation failure, 3 IO.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitEstimation = 2;
inline constexpr int kExitIo = 3;

int cmd_simulate(const CommonOptions& opt);
int cmd_estimate(const CommonOptions& opt, const std::string& path_csv,
                 std::optional<double> rho_override, std::optional<std::string> regressor_override);
int cmd_index(const CommonOptions& opt, const std::string& path_csv, double rho,
              std::optional<double> h);
int cmd_mc(const CommonOptions& opt);
int cmd_selftest(bool quiet);

/// Runs fn(), mapping library exceptions onto the exit-code contract.
int run_guarded(const std::string& name, const std::function<int()>& fn, bool quiet);

}  // namespace stablelad::cli
