#include "climashift/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "climashift/errors.hpp"
#include "climashift/rng.hpp"

namespace climashift {

using nlohmann::json;

namespace {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using ConstMatMap = Eigen::Map<const Matrix>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Per-output-row latitude weight; rows are (variable, lat, lon).
Vector row_weights(const GridSpec& grid, const LatWeights& weights) {
  Vector w(idx(kNumOutputs * grid.cells()));
  for (std::size_t r = 0; r < kNumOutputs * grid.cells(); ++r) {
    w(idx(r)) = weights.w[(r % grid.cells()) / grid.n_lon];
  }
  return w;
}

// Normalised inputs, one column per month.
Matrix assemble_inputs(const MlpParams& p, std::span<const ChunkView> batch, std::size_t cells) {
  Matrix x(idx(p.n_in), idx(batch.size() * kMonthsPerYear));
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c].inputs.size() != p.n_in * kMonthsPerYear) throw ContractError("chunk inputs do not match the network");
    const ConstMatMap raw(batch[c].inputs.data(), idx(p.n_in), idx(kMonthsPerYear));
    auto block = x.middleCols(idx(c * kMonthsPerYear), idx(kMonthsPerYear));
    for (std::size_t g = 0; g < kNumForcers; ++g) {
      block.middleRows(idx(g * cells), idx(cells)) =
          (raw.middleRows(idx(g * cells), idx(cells)).array() - p.in_mean[g]) / p.in_std[g];
    }
  }
  return x;
}

Matrix assemble_targets(const MlpParams& p, std::span<const ChunkView> batch) {
  Matrix t(idx(p.n_out), idx(batch.size() * kMonthsPerYear));
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c].outputs.size() != p.n_out * kMonthsPerYear) {
      throw ContractError("chunk outputs do not match the network");
    }
    t.middleCols(idx(c * kMonthsPerYear), idx(kMonthsPerYear)) =
        ConstMatMap(batch[c].outputs.data(), idx(p.n_out), idx(kMonthsPerYear));
  }
  return t;
}

struct Forward {
  Matrix hidden;  // tanh activations
  Matrix pred;    // physical units
};

Forward forward(const MlpParams& p, const Matrix& x) {
  const ConstRowMap w1(p.w1.data(), idx(p.n_hidden), idx(p.n_in));
  const ConstRowMap w2(p.w2.data(), idx(p.n_out), idx(p.n_hidden));
  const ConstVecMap b1(p.b1.data(), idx(p.n_hidden));
  const ConstVecMap b2(p.b2.data(), idx(p.n_out));
  const ConstVecMap out_mean(p.out_mean.data(), idx(p.n_out));
  const ConstVecMap out_std(p.out_std.data(), idx(p.n_out));
  Forward f;
  f.hidden = ((w1 * x).colwise() + b1).array().tanh();
  Matrix z = (w2 * f.hidden).colwise() + b2;
  f.pred = (out_std.asDiagonal() * z).colwise() + out_mean;
  return f;
}

double batch_loss(const Matrix& err, const Vector& w_rows, std::size_t cells) {
  const double n_fields = static_cast<double>(err.cols()) * kNumOutputs;
  return (w_rows.asDiagonal() * err.cwiseAbs2()).sum() / (static_cast<double>(cells) * n_fields);
}

std::vector<double> to_vector(const RowMatrix& m) { return {m.data(), m.data() + m.size()}; }
std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + what);
}

}  // namespace

MlpParams init_mlp(std::span<const ChunkView> train, const GridSpec& grid, std::size_t hidden, std::uint64_t seed) {
  if (train.empty()) throw ContractError("MLP needs at least one training chunk");
  if (hidden == 0) throw InvalidArgument("hidden width must be positive");
  const std::size_t cells = grid.cells();
  MlpParams p;
  p.n_in = kNumForcers * cells;
  p.n_hidden = hidden;
  p.n_out = kNumOutputs * cells;

  std::array<double, kNumForcers> sum{}, sum_sq{};
  std::vector<double> out_sum(p.n_out, 0.0), out_sq(p.n_out, 0.0);
  for (const ChunkView& c : train) {
    if (c.inputs.size() != p.n_in * kMonthsPerYear || c.outputs.size() != p.n_out * kMonthsPerYear) {
      throw ContractError("chunk does not match the grid");
    }
    for (std::size_t m = 0; m < kMonthsPerYear; ++m) {
      for (std::size_t g = 0; g < kNumForcers; ++g) {
        for (std::size_t k = 0; k < cells; ++k) {
          const double v = c.inputs[m * p.n_in + g * cells + k];
          sum[g] += v;
          sum_sq[g] += v * v;
        }
      }
      for (std::size_t r = 0; r < p.n_out; ++r) {
        const double v = c.outputs[m * p.n_out + r];
        out_sum[r] += v;
        out_sq[r] += v * v;
      }
    }
  }
  const double n_months = static_cast<double>(train.size() * kMonthsPerYear);
  auto finish = [](double s, double sq, double n, double& mean, double& sd) {
    mean = s / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    sd = std::sqrt(var);
    if (!(sd > 1e-12)) sd = 1.0;
  };
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    finish(sum[g], sum_sq[g], n_months * static_cast<double>(cells), p.in_mean[g], p.in_std[g]);
  }
  p.out_mean.resize(p.n_out);
  p.out_std.resize(p.n_out);
  for (std::size_t r = 0; r < p.n_out; ++r) finish(out_sum[r], out_sq[r], n_months, p.out_mean[r], p.out_std[r]);

  Pcg32 rng(seed);
  auto xavier = [&](std::size_t fan_in, std::size_t fan_out, std::size_t count) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(count);
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * a;
    return w;
  };
  p.w1 = xavier(p.n_in, p.n_hidden, p.n_hidden * p.n_in);
  p.b1.assign(p.n_hidden, 0.0);
  p.w2 = xavier(p.n_hidden, p.n_out, p.n_out * p.n_hidden);
  p.b2.assign(p.n_out, 0.0);
  return p;
}

void validate_mlp(const MlpParams& p, const GridSpec& grid) {
  if (p.n_in != kNumForcers * grid.cells() || p.n_out != kNumOutputs * grid.cells() || p.n_hidden == 0) {
    throw ContractError("MLP dimensions do not match the grid");
  }
  if (p.w1.size() != p.n_hidden * p.n_in || p.b1.size() != p.n_hidden || p.w2.size() != p.n_out * p.n_hidden ||
      p.b2.size() != p.n_out || p.out_mean.size() != p.n_out || p.out_std.size() != p.n_out) {
    throw ContractError("MLP parameter arrays have inconsistent sizes");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(p.w1) || !finite(p.b1) || !finite(p.w2) || !finite(p.b2) || !finite(p.out_mean)) {
    throw ContractError("MLP parameters must be finite");
  }
  for (double s : p.in_std) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ContractError("input normalisation std must be positive");
  }
  for (double s : p.out_std) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ContractError("output normalisation std must be positive");
  }
}

LossAndGradient loss_and_gradient(const MlpParams& p, std::span<const ChunkView> batch, const GridSpec& grid,
                                  const LatWeights& weights) {
  if (batch.empty()) throw ContractError("loss needs a non-empty batch");
  const std::size_t cells = grid.cells();
  const Matrix x = assemble_inputs(p, batch, cells);
  const Matrix truth = assemble_targets(p, batch);
  const Forward f = forward(p, x);
  const Vector w_rows = row_weights(grid, weights);
  const Matrix err = f.pred - truth;

  LossAndGradient out;
  out.loss = batch_loss(err, w_rows, cells);
  check_finite(out.loss, "loss");

  const double n_cols = static_cast<double>(x.cols());
  const ConstVecMap out_std(p.out_std.data(), idx(p.n_out));
  const ConstRowMap w2(p.w2.data(), idx(p.n_out), idx(p.n_hidden));
  // d loss / d pred = 2 w e / (cells * 2 * months) = w e / (cells * months)
  const Matrix d_z2 = (w_rows.cwiseProduct(out_std) / (static_cast<double>(cells) * n_cols)).asDiagonal() * err;
  const Matrix d_hidden = w2.transpose() * d_z2;
  const Matrix d_z1 = d_hidden.cwiseProduct((1.0 - f.hidden.array().square()).matrix());

  out.gradient.w2 = to_vector(RowMatrix(d_z2 * f.hidden.transpose()));
  out.gradient.b2 = to_vector(Vector(d_z2.rowwise().sum()));
  out.gradient.w1 = to_vector(RowMatrix(d_z1 * x.transpose()));
  out.gradient.b1 = to_vector(Vector(d_z1.rowwise().sum()));
  return out;
}

double mlp_loss(const MlpParams& p, std::span<const ChunkView> batch, const GridSpec& grid, const LatWeights& weights) {
  if (batch.empty()) throw ContractError("loss needs a non-empty batch");
  const Matrix x = assemble_inputs(p, batch, grid.cells());
  const Matrix truth = assemble_targets(p, batch);
  const Forward f = forward(p, x);
  const double loss = batch_loss(f.pred - truth, row_weights(grid, weights), grid.cells());
  check_finite(loss, "loss");
  return loss;
}

MlpEmulator::MlpEmulator(GridSpec grid, MlpParams params) : Emulator(std::move(grid)), params_(std::move(params)) {
  validate_mlp(params_, this->grid());
}

void MlpEmulator::do_predict(std::span<const double> in, std::span<double> out) const {
  const ChunkView view{{}, in, {}};
  const Matrix x = assemble_inputs(params_, std::span<const ChunkView>(&view, 1), grid().cells());
  const Forward f = forward(params_, x);
  Eigen::Map<Matrix>(out.data(), idx(params_.n_out), idx(kMonthsPerYear)) = f.pred;
}

json MlpEmulator::parameters_json() const {
  const MlpParams& p = params_;
  return json{{"hidden", p.n_hidden}, {"activation", "tanh"}, {"input_mean", p.in_mean}, {"input_std", p.in_std},
              {"output_mean", p.out_mean}, {"output_std", p.out_std}, {"w1", p.w1},
              {"b1", p.b1}, {"w2", p.w2}, {"b2", p.b2}};
}

MlpParams mlp_params_from_json(const json& doc, const GridSpec& grid) {
  MlpParams p;
  p.n_in = kNumForcers * grid.cells();
  p.n_out = kNumOutputs * grid.cells();
  p.n_hidden = doc.at("hidden").get<std::size_t>();
  p.in_mean = doc.at("input_mean").get<std::array<double, kNumForcers>>();
  p.in_std = doc.at("input_std").get<std::array<double, kNumForcers>>();
  p.out_mean = doc.at("output_mean").get<std::vector<double>>();
  p.out_std = doc.at("output_std").get<std::vector<double>>();
  p.w1 = doc.at("w1").get<std::vector<double>>();
  p.b1 = doc.at("b1").get<std::vector<double>>();
  p.w2 = doc.at("w2").get<std::vector<double>>();
  p.b2 = doc.at("b2").get<std::vector<double>>();
  validate_mlp(p, grid);
  return p;
}

namespace {

class AdamState {
 public:
  explicit AdamState(const MlpParams& p)
      : m_{zeros(p.w1), zeros(p.b1), zeros(p.w2), zeros(p.b2)}, v_(m_) {}

  void step(MlpParams& p, const MlpGradient& g, const TrainConfig& c, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c.adam_beta1, t_);
    const double bc2 = 1.0 - std::pow(c.adam_beta2, t_);
    update(p.w1, g.w1, m_[0], v_[0], c, lr, bc1, bc2);
    update(p.b1, g.b1, m_[1], v_[1], c, lr, bc1, bc2);
    update(p.w2, g.w2, m_[2], v_[2], c, lr, bc1, bc2);
    update(p.b2, g.b2, m_[3], v_[3], c, lr, bc1, bc2);
  }

 private:
  static std::vector<double> zeros(const std::vector<double>& like) { return std::vector<double>(like.size(), 0.0); }

  static void update(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m,
                     std::vector<double>& v, const TrainConfig& c, double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.adam_beta1 * m[i] + (1.0 - c.adam_beta1) * g[i];
      v[i] = c.adam_beta2 * v[i] + (1.0 - c.adam_beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.adam_eps);
    }
  }

  std::array<std::vector<double>, 4> m_;
  std::array<std::vector<double>, 4> v_;
  int t_ = 0;
};

void sgd_step(MlpParams& p, const MlpGradient& g, double lr) {
  auto upd = [lr](std::vector<double>& w, const std::vector<double>& d) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * d[i];
  };
  upd(p.w1, g.w1);
  upd(p.b1, g.b1);
  upd(p.w2, g.w2);
  upd(p.b2, g.b2);
}

}  // namespace

TrainResult train_mlp(std::span<const ChunkView> train, std::span<const ChunkView> val, const GridSpec& grid,
                      const TrainConfig& config) {
  validate_train_config(config);
  const LatWeights weights = lat_weights(grid);
  MlpParams params = init_mlp(train, grid, static_cast<std::size_t>(config.hidden), derive_seed(config.seed, {"init"}));
  MlpParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  AdamState adam(params);
  TrainResult result;

  std::vector<std::size_t> order(train.size());
  std::vector<ChunkView> batch;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    try {
      const double lr = lr_schedule(config, epoch);
      std::iota(order.begin(), order.end(), std::size_t{0});
      Pcg32 rng(derive_seed(config.seed, {"shuffle", std::to_string(epoch)}));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.bounded(static_cast<std::uint32_t>(i))]);
      }
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        batch.clear();
        for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) batch.push_back(train[order[k]]);
        const LossAndGradient lg = loss_and_gradient(params, batch, grid, weights);
        loss_sum += lg.loss * static_cast<double>(batch.size());
        if (config.optimizer == Optimizer::adam) {
          adam.step(params, lg.gradient, config, lr);
        } else {
          sgd_step(params, lg.gradient, lr);
        }
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.lr = lr;
      rec.train_loss = loss_sum / static_cast<double>(train.size());
      rec.val_loss = val.empty() ? mlp_loss(params, train, grid, weights) : mlp_loss(params, val, grid, weights);
      result.history.push_back(rec);
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        best = params;
        best_epoch = epoch;
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
    }
  }
  result.model = std::make_unique<MlpEmulator>(grid, std::move(best));
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace climashift
