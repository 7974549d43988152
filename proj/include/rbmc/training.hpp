#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbmc/error.hpp"
#include "rbmc/kernels.hpp"
#include "rbmc/rbm.hpp"
#include "rbmc/rng.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/tasks.hpp"

namespace rbmc {

enum class TaskKind { Adder, Multiplier };

struct TrainingTask {
  TaskKind kind = TaskKind::Adder;
  std::size_t n_bits = 1;
};

// Parses "adder<n>" / "mult<n>".
TrainingTask parse_training_task(const std::string& name);
std::string to_string(const TrainingTask& task);

// Hidden-unit counts used by default for each trained unit size.
std::size_t default_hidden_units(const TrainingTask& task);

// Number of valid rows: 2^(2n+1) for adders, 2^(2n) for multipliers.
std::uint64_t dataset_size(const TrainingTask& task);
std::vector<std::string> task_terminals(const TrainingTask& task);

inline constexpr std::uint64_t kMaxEnumeratedRows = std::uint64_t{1} << 20;

// All valid rows in input order, or a uniform random subset of `cap` distinct
// rows when cap is below the total. Refuses to enumerate more than
// kMaxEnumeratedRows without a cap.
std::vector<Bits> generate_dataset(const TrainingTask& task, std::optional<std::uint64_t> cap, Rng& rng);

struct EvalSettings {
  bool exact = true;  // exact conditional mode when the free set is small
  std::size_t chains = 4;
  std::size_t samples = 1000;
  std::uint64_t seed = 7;
  std::size_t n_instances = 0;  // 0 = every input combination
};

// Which statistics of the k-th reconstruction enter the negative phase of the gradient.
enum class NegativePhase { Sampled, MeanField };

struct TrainConfig {
  std::size_t k = 2;
  std::size_t k_max = 10;
  double learning_rate = 1.0;
  std::size_t epochs_per_stage = 10;
  std::size_t copies_per_epoch = 4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 4;
  std::optional<std::uint64_t> max_dataset;
  std::size_t patience = 2;
  double init_scale = 1.0;
  NegativePhase negative_phase = NegativePhase::MeanField;
  bool evaluate_every_epoch = true;  // checkpoint candidates at every epoch instead of only at stage ends
  std::uint64_t seed = 1;
  Exec exec = Exec::Parallel;
  EvalSettings eval;

  void validate() const;
};

struct CdStats {
  double reconstruction_error = 0.0;  // mean squared error of p(v | h_k) against the data
};

// Mutable parameter block for training; the single writer of a model in flight.
struct RbmParameters {
  std::vector<std::string> names;
  std::vector<double> weights;
  std::vector<double> visible_bias;
  std::vector<double> hidden_bias;

  static RbmParameters from(const Rbm& rbm);
  Rbm to_rbm() const;
  bool finite() const;
};

namespace kernels {

// CD-k gradient of one batch, averaged over rows. Row r draws its randomness
// from derive_seed(step_seed, r); per-row contributions are reduced in row
// order, so both variants give bit-identical results.
void cd_gradient_serial(const RbmParameters& p, const std::vector<Bits>& batch, std::size_t k, bool mean_field,
                        std::uint64_t step_seed, RbmParameters& grad, CdStats& stats);
void cd_gradient_parallel(const RbmParameters& p, const std::vector<Bits>& batch, std::size_t k, bool mean_field,
                          std::uint64_t step_seed, RbmParameters& grad, CdStats& stats);

}  // namespace kernels

// One CD-k update:
//   dW = lr * (<v h^T>_data - <v h^T>_recon) - lr * decay * W
// with hidden probabilities in both phases and analogous bias updates.
CdStats cd_step(RbmParameters& params, const std::vector<Bits>& batch, const TrainConfig& config,
                std::size_t k, Rng& rng);
Rbm cd_step(const Rbm& rbm, const std::vector<Bits>& batch, const TrainConfig& config, Rng& rng);

// Fraction of task instances whose clamped-inference mode is arithmetically
// correct (addition for adders, multiplication for multipliers).
struct Evaluation {
  double accuracy = 0.0;      // share of instances whose mode is correct
  double correct_mass = 0.0;  // mean probability (or sample share) on correct answers
};

// Solves every input combination (or n_instances random ones) of the task.
Evaluation evaluate(const Rbm& rbm, const TrainingTask& task, const EvalSettings& settings);
double evaluate_accuracy(const Rbm& rbm, const TrainingTask& task, const EvalSettings& settings);

struct StageMetrics {
  std::size_t stage;
  std::size_t k;
  std::size_t epoch;  // cumulative
  double reconstruction_error;
  double task_accuracy;
  double correct_mass;
};

struct TrainResult {
  Rbm model;
  std::vector<StageMetrics> metrics;
  double best_accuracy;
  double best_correct_mass;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// Stagewise CD: each stage runs epochs_per_stage epochs (an epoch is
// copies_per_epoch shuffled copies of the dataset) and then raises k by one.
// Stops once accuracy fails to improve for `patience` consecutive stages or k
// passes k_max, and returns the best stage's parameters.
TrainResult train(const TrainingTask& task, std::size_t n_hidden, const TrainConfig& config);

}  // namespace rbmc
