#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "climashift/dataset.hpp"
#include "climashift/emulators.hpp"
#include "climashift/grid.hpp"

namespace climashift {

/// Two-layer tanh network applied independently to each month:
///   h = tanh(W1 x + b1),  z = W2 h + b2,  y = out_mean + out_std * z
/// where x is the month's [4][n_lat][n_lon] forcing z-scored per forcer.
/// W1 is hidden x n_in and W2 is n_out x hidden, both row-major.
struct MlpParams {
  std::size_t n_in = 0;
  std::size_t n_hidden = 0;
  std::size_t n_out = 0;
  std::array<double, kNumForcers> in_mean{};
  std::array<double, kNumForcers> in_std{};
  std::vector<double> out_mean;  // per output row (variable, cell)
  std::vector<double> out_std;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
};

/// Same layout as the trainable part of MlpParams.
struct MlpGradient {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
};

/// Normalisation statistics from `train` and Xavier-uniform weights drawn
/// from Pcg32(seed); biases start at zero.
MlpParams init_mlp(std::span<const ChunkView> train, const GridSpec& grid, std::size_t hidden, std::uint64_t seed);

void validate_mlp(const MlpParams& params, const GridSpec& grid);

struct LossAndGradient {
  double loss = 0.0;
  MlpGradient gradient;
};

/// Latitude-weighted MSE of the batch predictions (physical units, both
/// variables) and its gradient by backpropagation. Throws ContractError for
/// an empty batch and DivergenceError on a non-finite loss.
LossAndGradient loss_and_gradient(const MlpParams& params, std::span<const ChunkView> batch, const GridSpec& grid,
                                  const LatWeights& weights);

/// Forward-only loss.
double mlp_loss(const MlpParams& params, std::span<const ChunkView> batch, const GridSpec& grid,
                const LatWeights& weights);

class MlpEmulator final : public Emulator {
 public:
  MlpEmulator(GridSpec grid, MlpParams params);
  EmulatorKind kind() const noexcept override { return EmulatorKind::mlp; }
  const MlpParams& params() const noexcept { return params_; }
  nlohmann::json parameters_json() const override;

 protected:
  void do_predict(std::span<const double> in, std::span<double> out) const override;

 private:
  MlpParams params_;
};

MlpParams mlp_params_from_json(const nlohmann::json& doc, const GridSpec& grid);

/// Mini-batch optimisation of the latitude-weighted MSE; keeps the parameters
/// with the lowest validation loss.
TrainResult train_mlp(std::span<const ChunkView> train, std::span<const ChunkView> val, const GridSpec& grid,
                      const TrainConfig& config);

}  // namespace climashift
