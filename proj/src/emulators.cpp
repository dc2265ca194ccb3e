#include "climashift/emulators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "climashift/errors.hpp"
#include "climashift/mlp.hpp"

namespace climashift {

using nlohmann::json;

std::string_view to_string(EmulatorKind kind) noexcept {
  switch (kind) {
    case EmulatorKind::climatology: return "climatology";
    case EmulatorKind::pattern_scaling: return "pattern_scaling";
    case EmulatorKind::mlp: return "mlp";
  }
  return "unknown";
}

EmulatorKind emulator_kind_from_string(std::string_view name) {
  for (EmulatorKind k : kAllEmulatorKinds) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown emulator kind '" + std::string(name) + "'");
}

void validate_train_config(const TrainConfig& c) {
  if (c.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(c.lr_init > 0.0) || !(c.warmup_lr > 0.0) || !(c.post_warmup_lr > 0.0)) {
    throw InvalidArgument("learning rates must be > 0");
  }
  if (!(c.decay_gamma > 0.0 && c.decay_gamma <= 1.0)) throw InvalidArgument("decay_gamma must lie in (0, 1]");
  if (c.warmup_epochs < 0) throw InvalidArgument("warmup_epochs must be >= 0");
  if (c.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (c.hidden < 1) throw InvalidArgument("hidden must be >= 1");
  if (!(c.ridge_lambda >= 0.0)) throw InvalidArgument("ridge_lambda must be >= 0");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) || !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0) ||
      !(c.adam_eps > 0.0)) {
    throw InvalidArgument("adam parameters out of range");
  }
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"lr_init", c.lr_init},
              {"decay_gamma", c.decay_gamma},
              {"warmup_epochs", c.warmup_epochs},
              {"warmup_lr", c.warmup_lr},
              {"post_warmup_lr", c.post_warmup_lr},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"hidden", c.hidden},
              {"ridge_lambda", c.ridge_lambda}};
}

TrainConfig train_config_from_json(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError(path, "must be an object");
  TrainConfig c;
  static const std::set<std::string> known{"epochs",   "lr_init",    "decay_gamma", "warmup_epochs", "warmup_lr",
                                           "post_warmup_lr", "batch_size", "seed", "optimizer", "adam_beta1",
                                           "adam_beta2", "adam_eps", "hidden", "ridge_lambda"};
  for (const auto& [key, value] : doc.items()) {
    if (known.count(key) == 0) throw ConfigError(path + "." + key, "unknown field");
  }
  auto get = [&](const char* key, auto& target) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(target);
    } catch (const json::exception& e) {
      throw ConfigError(path + "." + key, e.what());
    }
  };
  get("epochs", c.epochs);
  get("lr_init", c.lr_init);
  get("decay_gamma", c.decay_gamma);
  get("warmup_epochs", c.warmup_epochs);
  get("warmup_lr", c.warmup_lr);
  get("post_warmup_lr", c.post_warmup_lr);
  get("batch_size", c.batch_size);
  get("seed", c.seed);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("hidden", c.hidden);
  get("ridge_lambda", c.ridge_lambda);
  if (doc.contains("optimizer")) {
    const std::string opt = doc.at("optimizer").is_string() ? doc.at("optimizer").get<std::string>() : "";
    if (opt == "adam") {
      c.optimizer = Optimizer::adam;
    } else if (opt == "sgd") {
      c.optimizer = Optimizer::sgd;
    } else {
      throw ConfigError(path + ".optimizer", "must be \"adam\" or \"sgd\"");
    }
  }
  try {
    validate_train_config(c);
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

double lr_schedule(const TrainConfig& c, int epoch) {
  if (epoch < 0 || epoch >= c.epochs) {
    throw ContractError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(c.epochs) + ")");
  }
  if (c.warmup_epochs > 0) {
    if (epoch < c.warmup_epochs) {
      return c.warmup_lr + (c.post_warmup_lr - c.warmup_lr) * static_cast<double>(epoch) / c.warmup_epochs;
    }
    return c.post_warmup_lr * std::pow(c.decay_gamma, epoch - c.warmup_epochs);
  }
  return c.lr_init * std::pow(c.decay_gamma, epoch);
}

std::vector<double> Emulator::predict(std::span<const double> chunk_inputs) const {
  std::vector<double> out(output_size());
  predict_into(chunk_inputs, out);
  return out;
}

void Emulator::predict_into(std::span<const double> chunk_inputs, std::span<double> out) const {
  if (chunk_inputs.size() != input_size()) {
    throw ContractError("predict expects " + std::to_string(input_size()) + " input values, got " +
                        std::to_string(chunk_inputs.size()));
  }
  if (out.size() != output_size()) throw ContractError("predict output buffer has the wrong size");
  do_predict(chunk_inputs, out);
}

// Climatology

ClimatologyEmulator::ClimatologyEmulator(GridSpec grid, std::vector<double> means)
    : Emulator(std::move(grid)), means_(std::move(means)) {
  if (means_.size() != output_size()) throw ContractError("climatology means have the wrong size");
}

void ClimatologyEmulator::do_predict(std::span<const double>, std::span<double> out) const {
  std::copy(means_.begin(), means_.end(), out.begin());
}

json ClimatologyEmulator::parameters_json() const { return json{{"means", means_}}; }

std::unique_ptr<ClimatologyEmulator> fit_climatology(std::span<const ChunkView> train, const GridSpec& grid) {
  if (train.empty()) throw ContractError("climatology needs at least one training chunk");
  const std::size_t n = kMonthsPerYear * kNumOutputs * grid.cells();
  std::vector<double> sum(n, 0.0);
  for (const ChunkView& c : train) {
    if (c.outputs.size() != n) throw ContractError("chunk outputs do not match the grid");
    for (std::size_t i = 0; i < n; ++i) sum[i] += c.outputs[i];
  }
  for (double& v : sum) v /= static_cast<double>(train.size());
  return std::make_unique<ClimatologyEmulator>(grid, std::move(sum));
}

// Pattern scaling

PatternScalingEmulator::PatternScalingEmulator(GridSpec grid, std::vector<double> coefficients, double ridge_lambda)
    : Emulator(std::move(grid)), coefficients_(std::move(coefficients)), ridge_lambda_(ridge_lambda) {
  weights_ = lat_weights(this->grid());
  if (coefficients_.size() != kNumOutputs * this->grid().cells() * kFeatures) {
    throw ContractError("pattern scaling coefficients have the wrong size");
  }
}

double PatternScalingEmulator::coefficient(OutputVar var, std::size_t cell, std::size_t feature) const {
  const std::size_t row = static_cast<std::size_t>(var) * grid().cells() + cell;
  return coefficients_.at(row * kFeatures + feature);
}

std::array<double, PatternScalingEmulator::kFeatures> PatternScalingEmulator::features(
    std::span<const double> month_inputs, std::size_t month, const GridSpec& grid, const LatWeights& weights) {
  std::array<double, kFeatures> x{};
  x[0] = 1.0;
  const std::size_t cells = grid.cells();
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    x[1 + g] = weighted_mean(month_inputs.subspan(g * cells, cells), grid, weights);
  }
  if (month > 0) x[1 + kNumForcers + (month - 1)] = 1.0;
  return x;
}

void PatternScalingEmulator::do_predict(std::span<const double> in, std::span<double> out) const {
  const std::size_t cells = grid().cells();
  const std::size_t rows = kNumOutputs * cells;
  for (std::size_t m = 0; m < kMonthsPerYear; ++m) {
    const auto x = features(in.subspan(m * kNumForcers * cells, kNumForcers * cells), m, grid(), weights_);
    double* dst = out.data() + m * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* beta = coefficients_.data() + r * kFeatures;
      double acc = 0.0;
      for (std::size_t k = 0; k < kFeatures; ++k) acc += beta[k] * x[k];
      dst[r] = acc;
    }
  }
}

json PatternScalingEmulator::parameters_json() const {
  std::vector<std::string> names{"intercept"};
  for (std::string_view f : kForcerNames) names.emplace_back("global_" + std::string(f));
  for (std::size_t m = 2; m <= kMonthsPerYear; ++m) names.push_back("month_" + std::to_string(m));
  return json{{"ridge_lambda", ridge_lambda_}, {"features", names}, {"coefficients", coefficients_}};
}

std::unique_ptr<PatternScalingEmulator> fit_pattern_scaling(std::span<const ChunkView> train, const GridSpec& grid,
                                                            double ridge_lambda) {
  constexpr std::size_t p = PatternScalingEmulator::kFeatures;
  if (!(ridge_lambda >= 0.0)) throw InvalidArgument("ridge strength must be >= 0");
  const std::size_t months = train.size() * kMonthsPerYear;
  if (months < p) {
    throw ContractError("pattern scaling needs at least " + std::to_string(p) + " training months, got " +
                        std::to_string(months));
  }
  const std::size_t cells = grid.cells();
  const std::size_t rows = kNumOutputs * cells;
  const LatWeights weights = lat_weights(grid);

  Eigen::MatrixXd x(months, p);
  Eigen::MatrixXd y(months, rows);
  std::size_t t = 0;
  for (const ChunkView& c : train) {
    if (c.inputs.size() != kMonthsPerYear * kNumForcers * cells || c.outputs.size() != kMonthsPerYear * rows) {
      throw ContractError("chunk does not match the grid");
    }
    for (std::size_t m = 0; m < kMonthsPerYear; ++m, ++t) {
      const auto f = PatternScalingEmulator::features(c.inputs.subspan(m * kNumForcers * cells, kNumForcers * cells),
                                                      m, grid, weights);
      for (std::size_t k = 0; k < p; ++k) x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = f[k];
      for (std::size_t r = 0; r < rows; ++r) {
        y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(r)) = c.outputs[m * rows + r];
      }
    }
  }

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge_lambda;
  const Eigen::MatrixXd rhs = x.transpose() * y;

  // Jacobi scaling before the factorisation so the rank test is unit-free.
  const Eigen::VectorXd diag = gram.diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw SingularityError("pattern-scaling design has an all-zero column; use a ridge strength > 0");
  }
  const Eigen::VectorXd scale = diag.array().rsqrt();
  const Eigen::MatrixXd scaled = scale.asDiagonal() * gram * scale.asDiagonal();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || (d.array() <= 1e-12 * dmax).any()) {
    throw SingularityError("pattern-scaling design matrix is rank deficient; use a ridge strength > 0");
  }
  const Eigen::MatrixXd beta = scale.asDiagonal() * ldlt.solve(scale.asDiagonal() * rhs);  // p x rows

  std::vector<double> coeffs(rows * p);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < p; ++k) {
      coeffs[r * p + k] = beta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
    }
  }
  if (!std::all_of(coeffs.begin(), coeffs.end(), [](double v) { return std::isfinite(v); })) {
    throw SingularityError("pattern-scaling solve produced non-finite coefficients");
  }
  return std::make_unique<PatternScalingEmulator>(grid, std::move(coeffs), ridge_lambda);
}

// Training

namespace {

double dataset_loss(const Emulator& model, std::span<const ChunkView> chunks, const LatWeights& weights) {
  if (chunks.empty()) return 0.0;
  double sum = 0.0;
  std::vector<double> pred(model.output_size());
  for (const ChunkView& c : chunks) {
    model.predict_into(c.inputs, pred);
    sum += weighted_mse(pred, c.outputs, model.grid(), weights);
  }
  return sum / static_cast<double>(chunks.size());
}

}  // namespace

TrainResult train_on_chunks(EmulatorKind kind, std::span<const ChunkView> train, std::span<const ChunkView> val,
                            const GridSpec& grid, const TrainConfig& config) {
  validate_train_config(config);
  if (kind == EmulatorKind::mlp) return train_mlp(train, val, grid, config);

  TrainResult result;
  if (kind == EmulatorKind::climatology) {
    result.model = fit_climatology(train, grid);
  } else {
    result.model = fit_pattern_scaling(train, grid, config.ridge_lambda);
  }
  const LatWeights weights = lat_weights(grid);
  EpochRecord rec;
  rec.train_loss = dataset_loss(*result.model, train, weights);
  rec.val_loss = val.empty() ? rec.train_loss : dataset_loss(*result.model, val, weights);
  result.history.push_back(rec);
  return result;
}

TrainResult train(EmulatorKind kind, const SplitPlan& plan, const Dataset& dataset, const TrainConfig& config) {
  const auto violations = verify_split(plan, dataset.layout);
  if (!violations.empty()) {
    throw ContractError("split plan '" + plan.name + "' is invalid: " + violations.front().message);
  }
  const auto train_views = dataset.chunks(plan.train);
  const auto val_views = dataset.chunks(plan.val);
  return train_on_chunks(kind, train_views, val_views, dataset.grid, config);
}

json model_to_json(const Emulator& model, const TrainConfig& config, std::string_view plan, std::string_view oracle,
                   const std::vector<EpochRecord>& history, int best_epoch) {
  json hist = json::array();
  for (const EpochRecord& r : history) {
    hist.push_back({{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  }
  return json{{"format", "climashift-model"},
              {"format_version", 1},
              {"kind", to_string(model.kind())},
              {"grid", {{"n_lat", model.grid().n_lat}, {"n_lon", model.grid().n_lon}}},
              {"plan", plan},
              {"oracle", oracle},
              {"train_config", to_json(config)},
              {"best_epoch", best_epoch},
              {"history", hist},
              {"parameters", model.parameters_json()}};
}

ModelDocument model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "climashift-model" || doc.at("format_version").get<int>() != 1) {
      throw ContractError("not a version-1 model document");
    }
    ModelDocument out;
    const GridSpec grid = build_grid(doc.at("grid").at("n_lat").get<long>(), doc.at("grid").at("n_lon").get<long>());
    const EmulatorKind kind = emulator_kind_from_string(doc.at("kind").get<std::string>());
    const json& params = doc.at("parameters");
    switch (kind) {
      case EmulatorKind::climatology:
        out.model = std::make_unique<ClimatologyEmulator>(grid, params.at("means").get<std::vector<double>>());
        break;
      case EmulatorKind::pattern_scaling:
        out.model = std::make_unique<PatternScalingEmulator>(
            grid, params.at("coefficients").get<std::vector<double>>(), params.at("ridge_lambda").get<double>());
        break;
      case EmulatorKind::mlp:
        out.model = std::make_unique<MlpEmulator>(grid, mlp_params_from_json(params, grid));
        break;
    }
    out.config = train_config_from_json(doc.at("train_config"), "model.train_config");
    out.plan = doc.at("plan").get<std::string>();
    out.oracle = doc.at("oracle").get<std::string>();
    out.best_epoch = doc.at("best_epoch").get<int>();
    for (const json& r : doc.at("history")) {
      out.history.push_back(EpochRecord{r.at("epoch").get<int>(), r.at("lr").get<double>(),
                                        r.at("train_loss").get<double>(), r.at("val_loss").get<double>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace climashift
