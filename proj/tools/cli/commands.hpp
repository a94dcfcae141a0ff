#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace gbcos::cli {

enum ExitCode : int { kOk = 0, kToleranceFailure = 1, kUsageError = 2, kIoError = 3 };

/// Each command writes its artifacts and run_manifest.json under `out_dir`.
int cmd_check_gradients(const Json& config, const std::filesystem::path& out_dir, std::ostream& out);
int cmd_train_toy(const Json& config, const std::filesystem::path& out_dir, std::ostream& out);
int cmd_sweep_alpha(const Json& config, const std::filesystem::path& out_dir, std::ostream& out);
int cmd_boundary_map(const Json& config, const std::filesystem::path& out_dir, std::ostream& out);
int cmd_eval_pairs(const Json& config, const std::filesystem::path& out_dir, std::ostream& out);

/// Full command line (args[0] is the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gbcos::cli
