#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "CLI11.hpp"

#include "io.hpp"

#include "gbcos/error.hpp"
#include "gbcos/eval_metrics.hpp"
#include "gbcos/geometry.hpp"
#include "gbcos/gradient_audit.hpp"
#include "gbcos/toy_trainer.hpp"

namespace gbcos::cli {

namespace fs = std::filesystem;

namespace {

template <class... Args>
std::string printf_string(const char* fmt, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Json report_json(const VerificationReport& r, const PairSet& pairs) {
  Json roc = Json::array();
  for (const auto& p : r.roc) roc.push_back({{"threshold", p.threshold}, {"far", p.far}, {"tar", p.tar}});
  Json levels = Json::object();
  for (const auto& t : r.tar_at_far) {
    levels[format_double(t.far_level)] = {
        {"tar", t.tar}, {"threshold", t.threshold}, {"achieved_far", t.achieved_far}};
  }
  return {{"roc", std::move(roc)},
          {"tar_at_far", std::move(levels)},
          {"warnings", r.warnings},
          {"pairs", {{"genuine", pairs.genuine.size()}, {"impostor", pairs.impostor.size()}}}};
}

VerificationReport evaluate(const SphereBatch& batch, const EvalSettings& eval, PairSet& pairs) {
  pairs = build_pairs(batch, eval.max_pairs_per_class, eval.pair_seed);
  return tar_at_far(pairs, batch, eval.far_levels);
}

void print_tar_table(const VerificationReport& r, std::ostream& out) {
  out << "FAR        TAR       threshold\n";
  for (const auto& t : r.tar_at_far) out << printf_string("%-10g %-9.6f %.6f\n", t.far_level, t.tar, t.threshold);
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  CsvBuilder csv({"iter", "loss", "g_t_mean", "g_n_mean", "p_v_mean", "p_hat_v_mean", "p_vg", "intra_class_mean_cosine",
                  "inter_class_max_cosine"});
  for (const auto& r : log) {
    csv.cell(static_cast<long long>(r.iter))
        .cell(r.loss)
        .cell(r.g_t_mean)
        .cell(r.g_n_mean)
        .cell(r.p_v_mean)
        .cell(r.p_hat_v_mean)
        .cell(r.p_vg)
        .cell(r.intra_class_mean_cosine)
        .cell(r.inter_class_max_cosine);
    csv.end_row();
  }
  return csv.str();
}

Json audit_draw_json(const AuditDraw& d) {
  return {{"variant", std::string(to_string(d.config.variant))},
          {"s", d.config.s},
          {"m", d.config.m},
          {"m_p", d.config.m_p},
          {"m_theta", d.config.m_theta},
          {"alpha", d.config.alpha},
          {"p_y", d.p_y},
          {"p_nontarget", d.p_nontarget},
          {"p_v", d.p_v}};
}

std::string map_tag(std::size_t index, const MapEntry& e) {
  return printf_string("%02zu_%s_alpha%s_m%s", index, std::string(to_string(e.variant)).c_str(),
                       format_double(e.alpha).c_str(), format_double(e.m).c_str());
}

}  // namespace

int cmd_check_gradients(const Json& config, const fs::path& out_dir, std::ostream& out) {
  OutputDir dir(out_dir);
  const AuditReport report = run_gradient_audit(audit_from(config.at("audit")));

  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"op", c.op},
                      {"draws", c.draws},
                      {"worst_error", c.worst_error},
                      {"tolerance", c.tolerance},
                      {"passed", c.passed},
                      {"worst_draw", audit_draw_json(c.worst_draw)}});
    out << printf_string("%s %-36s worst %.3e  tol %.1e  draws %zu", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                         c.worst_error, c.tolerance, c.draws);
    if (!c.passed) out << "  op " << c.op;
    out << "\n";
  }
  dir.write("gradient_report.json", dump_json({{"passed", report.passed()}, {"checks", std::move(checks)}}));
  write_manifest(dir, "check-gradients", config);
  return report.passed() ? kOk : kToleranceFailure;
}

int cmd_train_toy(const Json& config, const fs::path& out_dir, std::ostream& out) {
  OutputDir dir(out_dir);
  const ToyDataset data = generate_dataset(dataset_from(config.at("dataset")));
  const TrainResult result = train(data, loss_from(config.at("loss")), optimizer_from(config.at("optimizer")));
  const SphereBatch& emb = result.state.embeddings;

  PairSet pairs;
  const VerificationReport report = evaluate(emb, eval_from(config.at("eval")), pairs);
  const ClusterStats stats = cluster_stats(emb);

  dir.write("train_log.csv", train_log_csv(result.log));
  dir.write("embeddings_final.csv", embeddings_csv(emb));
  dir.write("prototypes_final.csv", prototypes_csv(result.state.prototypes));
  dir.write("verification_report.json", dump_json(report_json(report, pairs), -1));
  write_manifest(dir, "train-toy", config);

  out << printf_string("iterations %zu  final loss %.6f\n", result.log.size(), result.log.back().loss);
  out << printf_string("intra_class_mean_cosine %.6f\ninter_class_max_cosine %.6f\n", stats.intra_class_mean_cosine,
                       stats.inter_class_max_cosine);
  print_tar_table(report, out);
  return kOk;
}

int cmd_sweep_alpha(const Json& config, const fs::path& out_dir, std::ostream& out) {
  OutputDir dir(out_dir);
  const ToyDataset data = generate_dataset(dataset_from(config.at("dataset")));
  const OptimizerConfig opt = optimizer_from(config.at("optimizer"));
  const EvalSettings eval = eval_from(config.at("eval"));
  LossConfig loss = loss_from(config.at("loss"));

  std::vector<std::string> header{"alpha", "intra_class_mean_cosine", "inter_class_max_cosine"};
  for (double f : eval.far_levels) header.push_back("tar_at_far_" + format_double(f));
  for (const char* h : {"final_loss", "p_vg_final", "g_t_over_g_n"}) header.emplace_back(h);
  CsvBuilder csv(header);

  out << "alpha   intra     inter     TAR@FAR(" << format_double(eval.far_levels.front()) << ")\n";
  for (const Json& a : config.at("sweep").at("alphas")) {
    loss.alpha = a.get<double>();
    const TrainResult r = train(data, loss, opt);
    PairSet pairs;
    const VerificationReport report = evaluate(r.state.embeddings, eval, pairs);
    const ClusterStats stats = cluster_stats(r.state.embeddings);
    const double ratio = r.log.size() >= 100 ? gradient_trajectory_report(r.log).ratio
                                             : std::numeric_limits<double>::quiet_NaN();

    csv.cell(loss.alpha).cell(stats.intra_class_mean_cosine).cell(stats.inter_class_max_cosine);
    for (const auto& t : report.tar_at_far) csv.cell(t.tar);
    csv.cell(r.log.back().loss).cell(r.log.back().p_vg).cell(ratio);
    csv.end_row();
    out << printf_string("%-7g %-9.6f %-9.6f %.6f\n", loss.alpha, stats.intra_class_mean_cosine,
                         stats.inter_class_max_cosine, report.tar_at_far.front().tar);
  }
  dir.write("alpha_sweep.csv", csv.str());
  write_manifest(dir, "sweep-alpha", config);
  return kOk;
}

int cmd_boundary_map(const Json& config, const fs::path& out_dir, std::ostream& out) {
  OutputDir dir(out_dir);
  const Json& g = config.at("geometry");
  const double angle = g.at("prototype_angle_deg").get<double>() * std::numbers::pi / 180.0;

  Json summary = Json::array();
  const auto maps = maps_from(g);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    for (const Json& t : g.at("targets")) {
      const std::string target = t.get<std::string>();
      BoundarySpec spec = BoundarySpec::with_angle(angle);
      spec.variant = maps[k].variant;
      spec.alpha = maps[k].alpha;
      spec.m = maps[k].m;
      spec.p_vg = g.at("p_vg").get<double>();
      spec.grid_resolution = g.at("grid_resolution").get<std::size_t>();
      spec.target = target == "p1" ? TargetPrototype::First : TargetPrototype::Second;
      const BoundaryMap map = trace_boundary(spec);

      CsvBuilder grid({"x", "y", "z", "lat_deg", "lon_deg", "residual"});
      for (const auto& p : map.points) {
        grid.cell(p.xyz[0]).cell(p.xyz[1]).cell(p.xyz[2]).cell(p.lat_deg).cell(p.lon_deg).cell(p.residual);
        grid.end_row();
      }
      CsvBuilder line({"x", "y", "z", "lat_deg", "lon_deg", "residual", "cell_variation"});
      for (const auto& v : map.boundary_polyline) {
        line.cell(v.xyz[0]).cell(v.xyz[1]).cell(v.xyz[2]).cell(v.lat_deg).cell(v.lon_deg).cell(v.residual);
        line.cell(v.cell_variation);
        line.end_row();
      }
      const std::string tag = map_tag(k, maps[k]) + "_" + target;
      dir.write("grid_" + tag + ".csv", grid.str());
      dir.write("boundary_" + tag + ".csv", line.str());
      summary.push_back({{"variant", std::string(to_string(spec.variant))},
                         {"alpha", spec.alpha},
                         {"m", spec.m},
                         {"target", target},
                         {"grid_file", "grid_" + tag + ".csv"},
                         {"boundary_file", "boundary_" + tag + ".csv"},
                         {"grid_points", map.points.size()},
                         {"boundary_vertices", map.boundary_polyline.size()}});
      out << printf_string("%-40s %zu boundary vertices\n", tag.c_str(), map.boundary_polyline.size());
    }
  }
  dir.write("boundary_maps.json", dump_json({{"maps", std::move(summary)}}));
  write_manifest(dir, "boundary-map", config);
  return kOk;
}

int cmd_eval_pairs(const Json& config, const fs::path& out_dir, std::ostream& out) {
  const std::string input = config.at("input").at("embeddings").get<std::string>();
  const std::string text = read_file(input);
  SphereBatch batch;
  try {
    batch = parse_embeddings_csv(text);
  } catch (const Error& e) {
    throw IoError("malformed embeddings CSV '" + input + "': " + e.what());
  }

  OutputDir dir(out_dir);
  PairSet pairs;
  const VerificationReport report = evaluate(batch, eval_from(config.at("eval")), pairs);
  dir.write("verification_report.json", dump_json(report_json(report, pairs), -1));
  write_manifest(dir, "eval-pairs", config, {{input, git_blob_sha1(text)}});
  out << printf_string("%zu genuine / %zu impostor pairs\n", pairs.genuine.size(), pairs.impostor.size());
  print_tar_table(report, out);
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GB-CosFace loss toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Json&, const fs::path&, std::ostream&);
  };
  const Entry entries[] = {
      {"check-gradients", "Verify analytic gradients against finite differences and loss identities",
       cmd_check_gradients},
      {"train-toy", "Train free embeddings on a synthetic identity dataset", cmd_train_toy},
      {"sweep-alpha", "Train and evaluate across a grid of alpha values", cmd_sweep_alpha},
      {"boundary-map", "Trace decision boundaries on the 2-sphere", cmd_boundary_map},
      {"eval-pairs", "Verification report for an embeddings CSV", cmd_eval_pairs},
  };
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config_path, "JSON config or a run_manifest.json to replay");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--set", overrides, "Override a scalar setting, e.g. --set loss.alpha=0.2");
  }

  std::vector<std::string> argv_tail(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(argv_tail));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : entries) {
    if (app.got_subcommand(e.name)) chosen = &e;
  }

  try {
    const Json config = resolve_config(chosen->name, config_path, overrides);
    return chosen->run(config, out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::NonFiniteLoss ? kToleranceFailure : kUsageError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kToleranceFailure;
  }
}

}  // namespace gbcos::cli
