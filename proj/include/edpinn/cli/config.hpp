#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edpinn/network/embedding.hpp"
#include "edpinn/pde/problem.hpp"
#include "edpinn/train/trainer.hpp"
#include "json.hpp"

namespace edpinn::cli {

/// One experiment, with every default filled in.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::filesystem::path output;

  pde::PdeProblem problem;

  std::string embedding = "default";  // default | fourier | identity
  int harmonics = 1;

  std::vector<double> boundaries;
  train::MethodSpec method;
  double initial_fraction = 0.5;  // aE: (T_f - T_p) / (T - T_p) at start
  train::TrainConfig train;

  double eval_t_end = 1.0;
  int reference_modes = 0;  // 0: per-problem default
  double reference_dt = 1e-4;
  int probe_points = 10000;

  network::InputEmbedding input_embedding() const;
  /// Effective settings as JSON (the form written next to run artifacts).
  nlohmann::json to_json() const;
  /// FNV-1a over everything that shapes the trained model: problem, network,
  /// intervals, method, training and seed.
  std::uint64_t hash() const;
};

/// JSON with // and /* */ comments allowed.
nlohmann::json read_config_text(const std::filesystem::path& path);

/// Throws ConfigError naming the offending field ("train.adam_lr: ...").
/// A relative output path is resolved against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets a dotted path ("network.width") inside a config document.
void set_dotted(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace edpinn::cli
