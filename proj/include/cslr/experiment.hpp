#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cslr/baselines.hpp"
#include "cslr/giraf.hpp"
#include "cslr/models.hpp"

namespace cslr {

using Json = nlohmann::json;

enum class SignalKind { dirac, rects, file };

struct SignalConfig {
  SignalKind kind = SignalKind::dirac;
  std::size_t r = 4;             // dirac
  double min_separation = 0.0;   // dirac; 0 means 2 / filter extent
  std::size_t count = 1;         // rects
  std::string path;              // file
  std::optional<std::uint64_t> seed;
};

struct SamplingConfig {
  double usf = 0.5;
  bool force_dc = false;
  std::optional<std::uint64_t> seed;
};

struct NoiseConfig {
  double snr_db = 0.0;
  std::optional<std::uint64_t> seed;
};

/// Measurements read from disk instead of being synthesized.
struct InputConfig {
  std::string measured;
  std::string mask;
  std::optional<std::string> truth;
};

struct AlgorithmConfig {
  std::string label;
  bool giraf = true;
  SolverConfig solver;
  BaselineConfig baseline;
  /// Rank taken from the ground truth lifting at rank_threshold.
  bool rank_auto = false;
  double rank_threshold = 1e-2;

  std::string name() const;
  /// p for giraf and irls, empty otherwise.
  std::optional<double> p() const;
};

enum class BenchMode { table, oversampling, inner_solver };

struct BenchConfig {
  BenchMode mode = BenchMode::table;
  std::vector<AlgorithmConfig> algorithms;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> usf;
  std::vector<double> oversample;
  double tol = 1e-4;
  std::vector<double> deltas{1.0, 10.0, 1e4};
  int inner_iters = 200;
  int warm_outer = 3;
  bool include_cg = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::optional<SignalConfig> signal;
  std::optional<InputConfig> input;
  std::optional<IndexBox> data_box;
  IndexBox filter_box;
  std::string weighting = "identity";
  SamplingConfig sampling;
  std::optional<NoiseConfig> noise;
  AlgorithmConfig algorithm;
  std::optional<BenchConfig> bench;
  /// Directory relative paths are resolved against.
  std::string base_dir = ".";
};

/// Parses and validates a configuration object; unknown keys are rejected.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
/// Reads a configuration or a manifest written by a previous run.
ExperimentConfig load_config(const std::string& path);
/// Fully resolved configuration (defaults and derived seeds filled in); parses
/// back to the same experiment.
Json config_to_json(const ExperimentConfig& cfg);
/// Replaces the master seed and drops per-section seeds so they are rederived.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

struct Seeds {
  std::uint64_t signal = 0;
  std::uint64_t sampling = 0;
  std::uint64_t noise = 0;
};
Seeds resolve_seeds(const ExperimentConfig& cfg);

std::vector<Weighting> make_weighting(const std::string& name, const IndexBox& box);

struct Problem {
  LiftingSpec spec;
  std::optional<ComplexGrid> truth;
  SamplingOp a;
};

Problem build_problem(const ExperimentConfig& cfg);

RecoveryTrace run_algorithm(const AlgorithmConfig& alg, const Problem& prob);

/// Subcommands. Each writes its outputs into out_dir (created if missing).
void run_gen(const ExperimentConfig& cfg, const std::string& out_dir);
RecoveryTrace run_recover(const ExperimentConfig& cfg, const std::string& out_dir);
void run_bench(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

struct CompareOptions {
  std::vector<std::string> files;
  std::optional<std::string> truth;
  std::optional<double> max_nmse;
  std::optional<double> max_nmse_diff;
  std::optional<double> max_diff;
};

struct CompareReport {
  std::string text;
  bool ok = true;
};

CompareReport run_compare(const CompareOptions& opt);

/// Exit code of the command-line tool for an exception: 2 configuration,
/// 3 data, 4 solver, 1 anything else.
int exit_code_for(const std::exception& e);
/// Machine-readable error description.
Json error_json(const std::exception& e);

}  // namespace cslr
