#include "config.hpp"

#include <algorithm>
#include <cmath>

#include "io.hpp"

#include "gbcos/error.hpp"

namespace gbcos::cli {

namespace {

Json loss_defaults() {
  const LossConfig c;
  return {{"variant", std::string(to_string(c.variant))},
          {"s", c.s},
          {"m", c.m},
          {"m_p", c.m_p},
          {"m_theta", c.m_theta},
          {"alpha", c.alpha},
          {"gamma", c.gamma}};
}

Json dataset_defaults() {
  const ToyDatasetSpec d;
  return {{"n_ids", d.n_ids},
          {"samples_per_id", d.samples_per_id},
          {"dim", d.dim},
          {"concentration", d.concentration},
          {"seed", d.seed}};
}

Json optimizer_defaults() {
  const OptimizerConfig o;
  return {{"lr", o.lr},
          {"momentum", o.momentum},
          {"batch_size", o.batch_size},
          {"epochs", o.epochs},
          {"seed", o.seed},
          {"lr_decay_fractions", Json::array()},
          {"lr_decay_factor", o.lr_decay_factor}};
}

Json eval_defaults() {
  return {{"far_levels", Json::array({1e-3, 1e-2, 1e-1})}, {"max_pairs_per_class", 100000u}, {"pair_seed", 3u}};
}

Json audit_defaults() {
  const GradientAuditConfig a;
  return {{"draws", a.draws},
          {"equivalence_draws", a.equivalence_draws},
          {"seed", a.seed},
          {"fd_step", a.fd_step},
          {"fd_tolerance", a.fd_tolerance},
          {"weighting_tolerance", a.weighting_tolerance},
          {"balance_tolerance", a.balance_tolerance},
          {"equivalence_tolerance", a.equivalence_tolerance},
          {"smooth_limit_gap", a.smooth_limit_gap},
          {"fault_injection", a.fault_injection}};
}

Json map_entry(std::string_view variant, double alpha, double m) {
  return {{"variant", std::string(variant)}, {"alpha", alpha}, {"m", m}};
}

Json geometry_defaults() {
  return {{"prototype_angle_deg", 60.0},
          {"p_vg", 0.62},
          {"grid_resolution", 128u},
          {"targets", Json::array({"p1", "p2"})},
          {"maps",
           Json::array({map_entry("gb-cosface", 1.0, 0.15), map_entry("gb-cosface", 0.5, 0.15),
            map_entry("gb-cosface", 0.0, 0.15), map_entry("cosface", 0.0, 0.3), map_entry("arcface", 0.0, 0.3),
            map_entry("softmax", 0.0, 0.0)})}};
}

bool is_integer(const Json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

std::string key_path(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

// Assigns `value` to the scalar slot `slot`, enforcing the slot's type.
void assign_scalar(Json& slot, const Json& value, const std::string& path) {
  if (is_integer(slot)) {
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
      throw ConfigError("'" + path + "' expects a non-negative integer");
    }
    slot = value.get<std::uint64_t>();
  } else if (slot.is_number_float()) {
    if (!value.is_number()) throw ConfigError("'" + path + "' expects a number");
    slot = value.get<double>();
  } else if (slot.is_string()) {
    if (!value.is_string()) throw ConfigError("'" + path + "' expects a string");
    slot = value;
  } else if (slot.is_boolean()) {
    if (!value.is_boolean()) throw ConfigError("'" + path + "' expects true or false");
    slot = value;
  } else {
    throw ConfigError("'" + path + "' is not a scalar setting");
  }
}

double number_at(const Json& j, const char* key) { return j.at(key).get<double>(); }

std::size_t count_at(const Json& j, const char* key) { return j.at(key).get<std::size_t>(); }

std::vector<double> numbers_at(const Json& j, const char* key) {
  std::vector<double> out;
  for (const Json& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

void validate_command(std::string_view command, const Json& config) {
  if (command == "check-gradients") {
    audit_from(config.at("audit")).validate();
    return;
  }
  if (command == "boundary-map") {
    const Json& g = config.at("geometry");
    const double angle = number_at(g, "prototype_angle_deg");
    if (!(angle > 0.0 && angle < 180.0)) throw ConfigError("prototype_angle_deg must lie in (0, 180)");
    if (count_at(g, "grid_resolution") < 32) throw ConfigError("grid_resolution must be at least 32");
    maps_from(g);
    if (g.at("targets").empty()) throw ConfigError("geometry.targets is empty");
    for (const Json& t : g.at("targets")) {
      if (t != "p1" && t != "p2") throw ConfigError("geometry.targets entries must be \"p1\" or \"p2\"");
    }
    return;
  }

  eval_from(config.at("eval"));
  if (command == "eval-pairs") {
    if (config.at("input").at("embeddings").get<std::string>().empty()) {
      throw ConfigError("input.embeddings must name an embeddings CSV");
    }
    return;
  }
  loss_from(config.at("loss")).validate();
  dataset_from(config.at("dataset")).validate();
  optimizer_from(config.at("optimizer")).validate();
  if (command == "sweep-alpha") {
    if (loss_from(config.at("loss")).variant != Variant::GBCosFace) {
      throw ConfigError("sweep-alpha requires loss.variant = gb-cosface");
    }
    const auto alphas = numbers_at(config.at("sweep"), "alphas");
    if (alphas.empty()) throw ConfigError("sweep.alphas is empty");
    for (double a : alphas) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep.alphas entries must lie in [0, 1]");
    }
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check-gradients", "train-toy", "sweep-alpha", "boundary-map",
                                              "eval-pairs"};
  return names;
}

Json default_config(std::string_view command) {
  Json c{{"schema_version", kSchemaVersion}};
  if (command == "check-gradients") {
    c["audit"] = audit_defaults();
  } else if (command == "train-toy" || command == "sweep-alpha") {
    c["loss"] = loss_defaults();
    c["dataset"] = dataset_defaults();
    c["optimizer"] = optimizer_defaults();
    c["eval"] = eval_defaults();
    if (command == "sweep-alpha") c["sweep"] = {{"alphas", Json::array({0.0, 0.05, 0.15, 0.25, 0.35, 0.6, 0.8, 1.0})}};
  } else if (command == "boundary-map") {
    c["geometry"] = geometry_defaults();
  } else if (command == "eval-pairs") {
    c["input"] = {{"embeddings", ""}};
    c["eval"] = eval_defaults();
  } else {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  return c;
}

void merge_strict(Json& base, const Json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError("'" + (where.empty() ? "config" : where) + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = key_path(where, key);
    if (!base.contains(key)) throw ConfigError("unknown key '" + path + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else if (slot.is_array()) {
      if (!value.is_array()) throw ConfigError("'" + path + "' expects an array");
      slot = value;
    } else {
      assign_scalar(slot, value, path);
    }
  }
}

void apply_override(Json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  Json* slot = &config;
  std::size_t begin = 0;
  while (true) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (!slot->is_object() || !slot->contains(key)) throw ConfigError("unknown key '" + path + "'");
    slot = &(*slot)[key];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  if (path == "schema_version") throw ConfigError("schema_version cannot be overridden");

  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (slot->is_array()) {
    if (!value.is_array()) throw ConfigError("'" + path + "' expects a JSON array");
    *slot = std::move(value);
    return;
  }
  assign_scalar(*slot, value, path);
}

Json load_config_file(const std::string& path, std::string_view command) {
  const std::string text = read_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("'" + path + "' is not valid JSON");
  if (!j.is_object()) throw ConfigError("'" + path + "' must hold a JSON object");

  if (j.contains("kind") && j["kind"] == kManifestKind) {
    if (!j.contains("command") || j["command"] != command) {
      throw ConfigError("manifest '" + path + "' was written by a different command");
    }
    if (!j.contains("config")) throw ConfigError("manifest '" + path + "' has no config");
    j = j["config"];
  }
  if (!j.contains("schema_version")) throw ConfigError("'" + path + "' lacks schema_version");
  if (j["schema_version"] != kSchemaVersion) {
    throw ConfigError("unsupported schema_version in '" + path + "' (expected " + std::to_string(kSchemaVersion) +
                      ")");
  }
  return j;
}

Json resolve_config(std::string_view command, const std::string& config_path,
                    const std::vector<std::string>& overrides) {
  Json config = default_config(command);
  if (!config_path.empty()) merge_strict(config, load_config_file(config_path, command));
  for (const auto& o : overrides) apply_override(config, o);
  try {
    if (command == "boundary-map") {
      // Echo complete map entries so the manifest never depends on defaults.
      Json& maps = config["geometry"]["maps"];
      Json full = Json::array();
      for (const MapEntry& e : maps_from(config["geometry"])) {
        full.push_back(map_entry(to_string(e.variant), e.alpha, e.m));
      }
      maps = std::move(full);
    }
    validate_command(command, config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(e.what());
  }
  return config;
}

LossConfig loss_from(const Json& j) {
  LossConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.s = number_at(j, "s");
  c.m = number_at(j, "m");
  c.m_p = number_at(j, "m_p");
  c.m_theta = number_at(j, "m_theta");
  c.alpha = number_at(j, "alpha");
  c.gamma = number_at(j, "gamma");
  return c;
}

ToyDatasetSpec dataset_from(const Json& j) {
  ToyDatasetSpec d;
  d.n_ids = count_at(j, "n_ids");
  d.samples_per_id = count_at(j, "samples_per_id");
  d.dim = count_at(j, "dim");
  d.concentration = number_at(j, "concentration");
  d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

OptimizerConfig optimizer_from(const Json& j) {
  OptimizerConfig o;
  o.lr = number_at(j, "lr");
  o.momentum = number_at(j, "momentum");
  o.batch_size = count_at(j, "batch_size");
  o.epochs = count_at(j, "epochs");
  o.seed = j.at("seed").get<std::uint64_t>();
  o.lr_decay_fractions = numbers_at(j, "lr_decay_fractions");
  o.lr_decay_factor = number_at(j, "lr_decay_factor");
  return o;
}

GradientAuditConfig audit_from(const Json& j) {
  GradientAuditConfig a;
  a.draws = count_at(j, "draws");
  a.equivalence_draws = count_at(j, "equivalence_draws");
  a.seed = j.at("seed").get<std::uint64_t>();
  a.fd_step = number_at(j, "fd_step");
  a.fd_tolerance = number_at(j, "fd_tolerance");
  a.weighting_tolerance = number_at(j, "weighting_tolerance");
  a.balance_tolerance = number_at(j, "balance_tolerance");
  a.equivalence_tolerance = number_at(j, "equivalence_tolerance");
  a.smooth_limit_gap = number_at(j, "smooth_limit_gap");
  a.fault_injection = j.at("fault_injection").get<std::string>();
  return a;
}

std::vector<MapEntry> maps_from(const Json& geometry) {
  const Json& maps = geometry.at("maps");
  if (maps.empty()) throw ConfigError("geometry.maps is empty");
  std::vector<MapEntry> out;
  for (const Json& e : maps) {
    Json entry = map_entry("softmax", 0.0, 0.0);
    merge_strict(entry, e, "geometry.maps[]");
    MapEntry m{variant_from_string(entry.at("variant").get<std::string>()), number_at(entry, "alpha"),
               number_at(entry, "m")};
    if (!(m.alpha >= 0.0 && m.alpha <= 1.0) || !(m.m >= 0.0)) {
      throw ConfigError("geometry.maps entries need alpha in [0, 1] and m >= 0");
    }
    out.push_back(m);
  }
  return out;
}

EvalSettings eval_from(const Json& j) {
  EvalSettings e;
  e.far_levels = numbers_at(j, "far_levels");
  e.max_pairs_per_class = count_at(j, "max_pairs_per_class");
  e.pair_seed = j.at("pair_seed").get<std::uint64_t>();
  if (e.far_levels.empty()) throw ConfigError("eval.far_levels is empty");
  if (!std::ranges::is_sorted(e.far_levels) ||
      !std::ranges::all_of(e.far_levels, [](double f) { return f > 0.0 && f < 1.0; })) {
    throw ConfigError("eval.far_levels must be sorted and inside (0, 1)");
  }
  if (e.max_pairs_per_class == 0) throw ConfigError("eval.max_pairs_per_class must be positive");
  return e;
}

}  // namespace gbcos::cli
