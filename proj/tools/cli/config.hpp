#pragma once

// Run configuration: per-command default trees, strict merging of user
// JSON, dotted-path overrides and conversion into library structs.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gbcos/gradient_audit.hpp"
#include "gbcos/margin_losses.hpp"
#include "gbcos/toy_trainer.hpp"

namespace gbcos::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kManifestKind = "gbcos-run-manifest";

/// Bad config content or flags; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names accepted as subcommands.
const std::vector<std::string>& command_names();

/// Complete default config for a command, including schema_version.
Json default_config(std::string_view command);

/// Overlays `user` onto `base`. Every key in `user` must exist in `base`
/// with a compatible type; integer fields only accept integers.
void merge_strict(Json& base, const Json& user, const std::string& where = "");

/// Applies "a.b.c=value". The value is parsed as JSON when possible and as a
/// bare string otherwise; the target must be an existing scalar or list.
void apply_override(Json& config, std::string_view assignment);

/// Loads a config or run manifest from disk. For a manifest the embedded
/// config is returned and its command must equal `command`.
Json load_config_file(const std::string& path, std::string_view command);

/// Defaults, then the optional file, then overrides, then validation.
Json resolve_config(std::string_view command, const std::string& config_path,
                    const std::vector<std::string>& overrides);

LossConfig loss_from(const Json& j);
ToyDatasetSpec dataset_from(const Json& j);
OptimizerConfig optimizer_from(const Json& j);
GradientAuditConfig audit_from(const Json& j);

struct MapEntry {
  Variant variant;
  double alpha;
  double m;
};
/// Entries of geometry.maps with missing keys filled from defaults.
std::vector<MapEntry> maps_from(const Json& geometry);

struct EvalSettings {
  std::vector<double> far_levels;
  std::size_t max_pairs_per_class = 0;
  std::uint64_t pair_seed = 0;
};
EvalSettings eval_from(const Json& j);

}  // namespace gbcos::cli
