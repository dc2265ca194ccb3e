#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "climashift/dataset.hpp"
#include "climashift/grid.hpp"
#include "climashift/split.hpp"

namespace climashift {

enum class EmulatorKind { climatology, pattern_scaling, mlp };

std::string_view to_string(EmulatorKind kind) noexcept;
/// Throws InvalidArgument for unknown names.
EmulatorKind emulator_kind_from_string(std::string_view name);
inline constexpr std::array<EmulatorKind, 3> kAllEmulatorKinds{EmulatorKind::climatology,
                                                               EmulatorKind::pattern_scaling, EmulatorKind::mlp};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int epochs = 50;
  double lr_init = 2e-4;
  double decay_gamma = 0.955;
  int warmup_epochs = 0;  // 5 to enable the warm-up phase
  double warmup_lr = 1e-8;
  double post_warmup_lr = 5e-4;
  int batch_size = 8;  // chunks (years) per step
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden = 64;
  double ridge_lambda = 0.0;  // pattern scaling only
};

void validate_train_config(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are an error.
TrainConfig train_config_from_json(const nlohmann::json& doc, const std::string& path);

/// Learning rate for `epoch` in [0, epochs). With warm-up the rate ramps
/// linearly from warmup_lr to post_warmup_lr over warmup_epochs and then
/// decays as post_warmup_lr * gamma^(epoch - warmup_epochs); without it the
/// rate is lr_init * gamma^epoch. Throws ContractError out of range.
double lr_schedule(const TrainConfig& config, int epoch);

/// Maps one year of forcing, [12][4][n_lat][n_lon], to [12][2][n_lat][n_lon]
/// with channels (TAS, PR). Emulators are immutable once built, so predict is
/// safe to call concurrently.
class Emulator {
 public:
  explicit Emulator(GridSpec grid) : grid_(std::move(grid)) {}
  virtual ~Emulator() = default;
  Emulator(const Emulator&) = delete;
  Emulator& operator=(const Emulator&) = delete;

  virtual EmulatorKind kind() const noexcept = 0;
  const GridSpec& grid() const noexcept { return grid_; }

  std::size_t input_size() const noexcept { return kMonthsPerYear * kNumForcers * grid_.cells(); }
  std::size_t output_size() const noexcept { return kMonthsPerYear * kNumOutputs * grid_.cells(); }

  /// Throws ContractError on a shape mismatch.
  std::vector<double> predict(std::span<const double> chunk_inputs) const;
  void predict_into(std::span<const double> chunk_inputs, std::span<double> out) const;

  virtual nlohmann::json parameters_json() const = 0;

 protected:
  virtual void do_predict(std::span<const double> in, std::span<double> out) const = 0;

 private:
  GridSpec grid_;
};

class ClimatologyEmulator final : public Emulator {
 public:
  /// means: [12][2][n_lat][n_lon]
  ClimatologyEmulator(GridSpec grid, std::vector<double> means);
  EmulatorKind kind() const noexcept override { return EmulatorKind::climatology; }
  const std::vector<double>& means() const noexcept { return means_; }
  nlohmann::json parameters_json() const override;

 protected:
  void do_predict(std::span<const double> in, std::span<double> out) const override;

 private:
  std::vector<double> means_;
};

/// Per output cell and variable: y = beta . [1, G_CO2, G_CH4, G_BC, G_SO2,
/// month_2..month_12], where G_g is the latitude-weighted global mean of
/// forcer g in that month and month_k indicates calendar month k (January is
/// the reference level).
class PatternScalingEmulator final : public Emulator {
 public:
  static constexpr std::size_t kFeatures = 1 + kNumForcers + (kMonthsPerYear - 1);

  /// coefficients: [2 * cells][kFeatures], variable-major like the outputs.
  PatternScalingEmulator(GridSpec grid, std::vector<double> coefficients, double ridge_lambda);
  EmulatorKind kind() const noexcept override { return EmulatorKind::pattern_scaling; }

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  double coefficient(OutputVar var, std::size_t cell, std::size_t feature) const;
  double ridge_lambda() const noexcept { return ridge_lambda_; }
  nlohmann::json parameters_json() const override;

  /// Feature vector for one month of inputs ([4][n_lat][n_lon]).
  static std::array<double, kFeatures> features(std::span<const double> month_inputs, std::size_t month,
                                                const GridSpec& grid, const LatWeights& weights);

 protected:
  void do_predict(std::span<const double> in, std::span<double> out) const override;

 private:
  std::vector<double> coefficients_;
  double ridge_lambda_;
  LatWeights weights_;
};

/// Per-(month, variable, cell) mean of the training outputs.
/// Throws ContractError for an empty training set.
std::unique_ptr<ClimatologyEmulator> fit_climatology(std::span<const ChunkView> train, const GridSpec& grid);

/// Solves (X^T X + lambda I) beta = X^T y for every output cell at once (the
/// design matrix is shared). Needs at least kFeatures training months. With
/// lambda = 0 a rank-deficient design throws SingularityError.
std::unique_ptr<PatternScalingEmulator> fit_pattern_scaling(std::span<const ChunkView> train, const GridSpec& grid,
                                                            double ridge_lambda);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::unique_ptr<Emulator> model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Closed-form fits for climatology and pattern scaling (one history entry);
/// mini-batch training with model selection on validation loss for the MLP.
/// Deterministic given config.seed. Divergence throws DivergenceError with
/// the epoch index.
TrainResult train_on_chunks(EmulatorKind kind, std::span<const ChunkView> train, std::span<const ChunkView> val,
                            const GridSpec& grid, const TrainConfig& config);

/// Verifies the plan against the dataset and trains on its train/val sets.
TrainResult train(EmulatorKind kind, const SplitPlan& plan, const Dataset& dataset, const TrainConfig& config);

/// Self-describing model document: kind, grid, parameters, training config
/// echo, plan name and loss history.
struct ModelDocument {
  std::unique_ptr<Emulator> model;
  TrainConfig config;
  std::string plan;
  std::string oracle;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

nlohmann::json model_to_json(const Emulator& model, const TrainConfig& config, std::string_view plan,
                             std::string_view oracle, const std::vector<EpochRecord>& history, int best_epoch);
ModelDocument model_from_json(const nlohmann::json& doc);

}  // namespace climashift
