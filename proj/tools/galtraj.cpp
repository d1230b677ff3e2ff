#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "galtraj/active_loop.hpp"
#include "galtraj/dataset_io.hpp"
#include "galtraj/denoiser.hpp"
#include "galtraj/errors.hpp"
#include "galtraj/history.hpp"
#include "galtraj/metrics.hpp"
#include "galtraj/run_config.hpp"
#include "galtraj/svg_plot.hpp"
#include "galtraj/synthesize.hpp"

namespace fs = std::filesystem;
using namespace galtraj;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Output root: $GALTRAJ_OUT prefixes relative --out paths.
fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("GALTRAJ_OUT")) return fs::path(root) / p;
  return p;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

cfg::AppConfig make_config(const CommonArgs& args) {
  cfg::AppConfig config =
      args.config_path.empty() ? cfg::default_config() : cfg::load_config(args.config_path);
  for (const auto& ov : args.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + ov + "'");
    cfg::apply_override(config, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (args.seed_set) {
    config.seed = args.seed;
    config.sync();
  }
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run-config file (key = value lines)");
  cmd->add_option("--set", args.overrides, "override a config key, e.g. --set run.alpha=0.8");
  cmd->add_option("--seed", args.seed, "root seed override")->each([&args](const std::string&) {
    args.seed_set = true;
  });
}

std::string timestamp_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

double mean_ade(const metrics::ErrorTable& t) {
  double acc = 0.0;
  for (const auto& [k, r] : t.rows()) acc += r.minade6;
  return acc / static_cast<double>(t.size());
}

double mean_fde(const metrics::ErrorTable& t) {
  double acc = 0.0;
  for (const auto& [k, r] : t.rows()) acc += r.minfde6;
  return acc / static_cast<double>(t.size());
}

int cmd_dataset(const CommonArgs& common, const std::string& out_dir) {
  const cfg::AppConfig config = make_config(common);
  const fs::path out = resolve_out(out_dir);
  fs::create_directories(out);

  const std::string canonical = cfg::canonical_string(config);
  world::DatasetHeader header;
  header.config_hash = world::fnv1a_hex(canonical);

  auto write_split = [&](const char* name, int count, std::uint64_t seed) {
    world::DatasetConfig dc = config.dataset;
    dc.count = count;
    header.seed = seed;
    const auto scenarios = world::synthesize_dataset(dc, seed);
    world::save_dataset(scenarios, (out / name).string(), header);
    std::cout << name << ": " << scenarios.size() << " scenarios\n";
  };
  write_split("train.jsonl", config.dataset.count, mix_seed(config.seed, 0x7124));
  write_split("val.jsonl", config.val_count, mix_seed(config.seed, 0x7a1));
  std::cout << "config_hash: " << header.config_hash << "\n";
  return 0;
}

int cmd_pretrain_denoiser(const CommonArgs& common, const std::string& dataset_path,
                          const std::string& out_path, bool resume) {
  const cfg::AppConfig config = make_config(common);
  const auto scenarios = world::load_dataset(dataset_path);
  if (scenarios.empty()) throw DataError("pretrain-denoiser: dataset is empty");

  const fs::path out = resolve_out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  diff::DiffusionSchedule schedule(config.schedule_steps, config.beta_start, config.beta_end);
  diff::Denoiser denoiser =
      resume ? diff::Denoiser::load(out.string())
             : diff::Denoiser(config.denoiser, schedule, mix_seed(config.seed, 0xDE));
  const auto losses =
      denoiser.train(scenarios, config.denoiser_epochs, mix_seed(config.seed, 0xDE + 1));
  denoiser.save(out.string());

  fs::path loss_path = out;
  loss_path.replace_extension(".loss.csv");
  std::ofstream loss_file(loss_path);
  loss_file << "epoch,holdout_loss\n";
  const int base = denoiser.epoch() - static_cast<int>(losses.size());
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", losses[i]);
    loss_file << base + static_cast<int>(i) + 1 << "," << buf << "\n";
  }
  std::cout << "denoiser: " << denoiser.epoch() << " epochs, checkpoint " << out << "\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& method_name,
              const std::string& dataset_path, const std::string& val_path,
              const std::string& denoiser_path, const std::string& out_dir) {
  const cfg::AppConfig config = make_config(common);
  const auto method = loop::method_from_name(method_name);
  if (!method) throw ConfigError("train: unknown method '" + method_name + "'");

  const bool generative = *method == loop::Method::kGalTraj || *method == loop::Method::kNaive;
  if (generative && denoiser_path.empty())
    throw ConfigError("train: method '" + method_name + "' requires --denoiser");

  const auto train_scenarios = world::load_dataset(dataset_path);
  std::vector<world::Scenario> val_scenarios;
  if (!val_path.empty()) val_scenarios = world::load_dataset(val_path);

  std::optional<diff::Denoiser> denoiser;
  if (!denoiser_path.empty()) denoiser = diff::Denoiser::load(denoiser_path);

  const fs::path out = resolve_out(out_dir);
  fs::create_directories(out);

  loop::RunResult result = loop::run_method(*method, config.run, train_scenarios, val_scenarios,
                                            denoiser ? &*denoiser : nullptr);
  result.history.created_at = timestamp_now();

  const std::string stem = method_name;
  result.predictor.save((out / (stem + "_predictor.json")).string());
  loop::save_history(result.history, (out / (stem + "_history.json")).string());
  if (!result.reference_table.empty())
    metrics::save_error_table(result.reference_table, (out / (stem + "_reference.csv")).string());

  std::cout << "train " << method_name << ": " << result.history.epochs.size() << " epochs";
  if (!result.history.epochs.empty() && result.history.epochs.back().val_minade6)
    std::cout << ", val minADE6 " << *result.history.epochs.back().val_minade6;
  std::cout << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::vector<std::string>& checkpoints,
             const std::string& split_path, const std::string& reference_path,
             const std::vector<std::string>& histories, const std::string& out_dir) {
  const cfg::AppConfig config = make_config(common);
  if (checkpoints.empty()) throw ConfigError("eval: at least one --checkpoint required");
  const auto split = world::load_dataset(split_path);
  if (split.empty()) throw DataError("eval: empty split " + split_path);
  const metrics::ErrorTable reference = metrics::load_error_table(reference_path);

  const fs::path out = resolve_out(out_dir);
  fs::create_directories(out);

  std::string header = "model";
  for (double k : config.eval_top_k) {
    char kb[32];
    std::snprintf(kb, sizeof(kb), "%g", k);
    header += std::string(",top") + kb;
  }
  header += ",var" + std::to_string(config.eval_var_alpha);
  {
    char tb[32];
    std::snprintf(tb, sizeof(tb), "%g", config.eval_fpr_threshold);
    header += std::string(",fpr") + tb;
  }
  header += ",minade6,minfde6";

  std::ofstream csv(out / "metrics.csv");
  csv << header << "\n";

  std::vector<std::string> model_names;
  std::map<std::string, std::vector<double>> topk_by_model;
  for (const auto& ckpt : checkpoints) {
    const pred::Predictor predictor = pred::Predictor::load(ckpt);
    const std::string model = fs::path(ckpt).stem().string();
    model_names.push_back(model);
    const metrics::ErrorTable table = loop::evaluate_predictor(predictor, split, model, "eval");
    metrics::save_error_table(table, (out / ("errors_" + model + ".csv")).string());

    csv << model;
    char buf[64];
    for (double k : config.eval_top_k) {
      const double v = metrics::top_k_percent(reference, table, k);
      topk_by_model[model].push_back(v);
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      csv << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.6g", metrics::value_at_risk(table, config.eval_var_alpha));
    csv << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.6g",
                  metrics::false_prediction_ratio(table, config.eval_fpr_threshold));
    csv << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.6g", mean_ade(table));
    csv << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.6g", mean_fde(table));
    csv << "," << buf << "\n";

    std::vector<double> errors;
    for (const auto& [key, row] : table.rows()) errors.push_back(row.minade6);
    plot::write_histogram((out / ("error_hist_" + model + ".svg")).string(),
                          "minADE6 distribution: " + model, "minADE6 (m)", errors, 40);
  }
  csv.close();

  if (!histories.empty()) {
    std::vector<plot::Series> series;
    for (const auto& hp : histories) {
      const loop::RunHistory h = loop::load_history(hp);
      plot::Series s;
      s.label = h.method;
      for (const auto& e : h.epochs) {
        if (!e.val_minade6) continue;
        s.x.push_back(e.epoch);
        s.y.push_back(*e.val_minade6);
      }
      series.push_back(std::move(s));
    }
    plot::write_line_chart((out / "metric_curves.svg").string(), "validation minADE6 by epoch",
                           "epoch", "minADE6 (m)", series);
  }

  if (model_names.size() >= 2) {
    std::vector<plot::Series> series;
    for (const auto& m : model_names) {
      plot::Series s;
      s.label = m;
      for (std::size_t i = 0; i < config.eval_top_k.size(); ++i) {
        s.x.push_back(config.eval_top_k[i]);
        s.y.push_back(topk_by_model[m][i]);
      }
      series.push_back(std::move(s));
    }
    plot::write_line_chart((out / "comparison.svg").string(), "top-k% minADE6 by model",
                           "k (%)", "minADE6 (m)", series);
  }

  std::cout << "eval: wrote " << (out / "metrics.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-tail trajectory prediction with tail-aware generative augmentation"};
  app.require_subcommand(1);

  CommonArgs c_dataset, c_pretrain, c_train, c_eval;
  std::string out_dataset = "out", out_pretrain = "out/denoiser.json", out_train = "out";
  std::string out_eval = "out/eval";

  CLI::App* dataset = app.add_subcommand("dataset", "synthesize train/val scenario files");
  add_common(dataset, c_dataset);
  dataset->add_option("--out", out_dataset, "output directory");

  CLI::App* pretrain =
      app.add_subcommand("pretrain-denoiser", "train the diffusion generator once");
  add_common(pretrain, c_pretrain);
  std::string pretrain_dataset;
  bool pretrain_resume = false;
  pretrain->add_option("--dataset", pretrain_dataset, "training scenario file")->required();
  pretrain->add_option("--out", out_pretrain, "checkpoint path");
  pretrain->add_flag("--resume", pretrain_resume, "continue from existing checkpoint");

  CLI::App* train = app.add_subcommand("train", "train a predictor with one method");
  add_common(train, c_train);
  std::string method, train_dataset, train_val, train_denoiser;
  train->add_option("--method", method, "vanilla | resampling | naive | galtraj")->required();
  train->add_option("--dataset", train_dataset, "training scenario file")->required();
  train->add_option("--val", train_val, "validation scenario file");
  train->add_option("--denoiser", train_denoiser, "denoiser checkpoint (galtraj, naive)");
  train->add_option("--out", out_train, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "evaluate checkpoints and emit tables/plots");
  add_common(eval, c_eval);
  std::vector<std::string> eval_checkpoints, eval_histories;
  std::string eval_split, eval_reference;
  eval->add_option("--checkpoint", eval_checkpoints, "predictor checkpoint (repeatable)")
      ->required();
  eval->add_option("--split", eval_split, "scenario file to evaluate on")->required();
  eval->add_option("--reference-table", eval_reference, "frozen pretrained-model error table")
      ->required();
  eval->add_option("--history", eval_histories, "history file for metric curves (repeatable)");
  eval->add_option("--out", out_eval, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (dataset->parsed()) return cmd_dataset(c_dataset, out_dataset);
    if (pretrain->parsed())
      return cmd_pretrain_denoiser(c_pretrain, pretrain_dataset, out_pretrain, pretrain_resume);
    if (train->parsed())
      return cmd_train(c_train, method, train_dataset, train_val, train_denoiser, out_train);
    if (eval->parsed())
      return cmd_eval(c_eval, eval_checkpoints, eval_split, eval_reference, eval_histories,
                      out_eval);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
