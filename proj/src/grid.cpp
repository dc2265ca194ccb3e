#include "climashift/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "climashift/errors.hpp"

namespace climashift {

GridSpec build_grid(long n_lat, long n_lon) {
  if (n_lat < 1 || n_lon < 1) {
    throw InvalidArgument("grid counts must be positive, got n_lat=" + std::to_string(n_lat) +
                          " n_lon=" + std::to_string(n_lon));
  }
  GridSpec grid;
  grid.n_lat = static_cast<std::size_t>(n_lat);
  grid.n_lon = static_cast<std::size_t>(n_lon);
  grid.lat_deg.resize(grid.n_lat);
  grid.lon_deg.resize(grid.n_lon);
  for (std::size_t i = 0; i < grid.n_lat; ++i) {
    grid.lat_deg[i] = -90.0 + (static_cast<double>(i) + 0.5) * 180.0 / static_cast<double>(n_lat);
  }
  for (std::size_t j = 0; j < grid.n_lon; ++j) {
    grid.lon_deg[j] = (static_cast<double>(j) + 0.5) * 360.0 / static_cast<double>(n_lon);
  }
  return grid;
}

void validate_grid(const GridSpec& grid) {
  if (grid.n_lat < 1 || grid.n_lon < 1) throw InvalidArgument("grid has zero cells");
  if (grid.lat_deg.size() != grid.n_lat || grid.lon_deg.size() != grid.n_lon) {
    throw ContractError("grid coordinate arrays do not match n_lat/n_lon");
  }
  const GridSpec expected = build_grid(static_cast<long>(grid.n_lat), static_cast<long>(grid.n_lon));
  for (std::size_t i = 0; i < grid.n_lat; ++i) {
    if (std::abs(grid.lat_deg[i] - expected.lat_deg[i]) > 1e-9) {
      throw ContractError("latitude " + std::to_string(i) + " is not a uniform cell centre");
    }
  }
  for (std::size_t j = 0; j < grid.n_lon; ++j) {
    if (std::abs(grid.lon_deg[j] - expected.lon_deg[j]) > 1e-9) {
      throw ContractError("longitude " + std::to_string(j) + " is not a uniform cell centre");
    }
  }
}

LatWeights lat_weights(const GridSpec& grid) {
  validate_grid(grid);
  return lat_weights(grid.lat_deg);
}

LatWeights lat_weights(std::span<const double> lat_deg) {
  if (lat_deg.empty()) throw InvalidArgument("latitude list is empty");
  LatWeights out;
  out.w.resize(lat_deg.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < lat_deg.size(); ++i) {
    if (!(lat_deg[i] > -90.0 && lat_deg[i] < 90.0)) throw InvalidArgument("latitude must lie strictly inside (-90, 90)");
    out.w[i] = std::cos(lat_deg[i] * std::numbers::pi / 180.0);
    sum += out.w[i];
  }
  const double mean = sum / static_cast<double>(lat_deg.size());
  for (double& v : out.w) v /= mean;
  return out;
}

namespace {

void check_field_block(std::size_t size, const GridSpec& grid, const LatWeights& weights) {
  if (weights.w.size() != grid.n_lat) throw ContractError("weights do not match grid latitude count");
  if (grid.cells() == 0 || size % grid.cells() != 0) {
    throw ContractError("array size " + std::to_string(size) + " is not a multiple of the grid cell count " +
                        std::to_string(grid.cells()));
  }
}

// Assumes sizes were checked by the caller.
double field_mse_unchecked(const double* pred, const double* truth, const GridSpec& grid,
                           const LatWeights& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < grid.n_lat; ++i) {
    double row = 0.0;
    const std::size_t base = i * grid.n_lon;
    for (std::size_t j = 0; j < grid.n_lon; ++j) {
      const double e = pred[base + j] - truth[base + j];
      row += e * e;
    }
    total += weights.w[i] * row;
  }
  return total / static_cast<double>(grid.cells());
}

}  // namespace

double field_weighted_mse(std::span<const double> pred, std::span<const double> truth,
                          const GridSpec& grid, const LatWeights& weights) {
  if (pred.size() != grid.cells() || truth.size() != grid.cells()) {
    throw ContractError("field size does not match grid");
  }
  check_field_block(pred.size(), grid, weights);
  return field_mse_unchecked(pred.data(), truth.data(), grid, weights);
}

double weighted_mse(std::span<const double> pred, std::span<const double> truth, const GridSpec& grid,
                    const LatWeights& weights) {
  if (pred.size() != truth.size()) throw ContractError("prediction and truth shapes differ");
  check_field_block(pred.size(), grid, weights);
  const std::size_t n_fields = pred.size() / grid.cells();
  if (n_fields == 0) throw ContractError("empty field stack");
  double sum = 0.0;
  for (std::size_t f = 0; f < n_fields; ++f) {
    const std::size_t off = f * grid.cells();
    sum += field_mse_unchecked(pred.data() + off, truth.data() + off, grid, weights);
  }
  return sum / static_cast<double>(n_fields);
}

double weighted_rmse(std::span<const double> pred, std::span<const double> truth, const GridSpec& grid,
                     const LatWeights& weights) {
  if (pred.size() != truth.size()) throw ContractError("prediction and truth shapes differ");
  if (pred.empty()) throw ContractError("empty forecast set");
  check_field_block(pred.size(), grid, weights);
  const std::size_t n_fields = pred.size() / grid.cells();
  double sum = 0.0;
  for (std::size_t f = 0; f < n_fields; ++f) {
    const std::size_t off = f * grid.cells();
    sum += std::sqrt(field_mse_unchecked(pred.data() + off, truth.data() + off, grid, weights));
  }
  return sum / static_cast<double>(n_fields);
}

double weighted_mean(std::span<const double> field, const GridSpec& grid, const LatWeights& weights) {
  if (field.size() != grid.cells()) throw ContractError("field size does not match grid");
  if (weights.w.size() != grid.n_lat) throw ContractError("weights do not match grid latitude count");
  double total = 0.0;
  for (std::size_t i = 0; i < grid.n_lat; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < grid.n_lon; ++j) row += field[i * grid.n_lon + j];
    total += weights.w[i] * row;
  }
  return total / static_cast<double>(grid.cells());
}

}  // namespace climashift
