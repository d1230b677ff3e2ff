#ifndef GALTRAJ_RUN_CONFIG_HPP_
#define GALTRAJ_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "galtraj/active_loop.hpp"
#include "galtraj/denoiser.hpp"
#include "galtraj/synthesize.hpp"

namespace galtraj::cfg {

// One manifest for the whole experiment; every hyperparameter has a default
// and can be overridden by a `key = value` line or a CLI --set flag.
struct AppConfig {
  world::DatasetConfig dataset;
  int val_count = 500;

  pred::PredictorConfig predictor;

  diff::DenoiserConfig denoiser;
  int denoiser_epochs = 10;
  int schedule_steps = 32;
  double beta_start = 1e-4;
  double beta_end = 0.05;

  loop::RunConfig run;

  std::vector<double> eval_top_k{1.0, 3.0, 5.0};
  int eval_var_alpha = 999;
  double eval_fpr_threshold = 5.0;

  std::uint64_t seed = 0;

  // Keeps nested copies (horizons, guidance, predictor) consistent.
  void sync() ;
};

AppConfig default_config();

// `key = value` lines, '#' comments. Throws ConfigError on unknown keys or
// unparsable values.
AppConfig load_config(const std::string& path);
void apply_override(AppConfig& config, const std::string& key, const std::string& value);

// Canonical sorted key=value dump; hashed into dataset headers.
std::string canonical_string(const AppConfig& config);

}  // namespace galtraj::cfg

#endif  // GALTRAJ_RUN_CONFIG_HPP_
