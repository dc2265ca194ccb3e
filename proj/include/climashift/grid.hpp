#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace climashift {

/// Uniform cell-centred latitude/longitude raster.
///
/// Cell centres are lat_i = -90 + (i + 0.5) * 180 / n_lat and
/// lon_j = (j + 0.5) * 360 / n_lon. Fields on the grid are stored row-major,
/// latitude outermost: value(i, j) lives at index i * n_lon + j.
struct GridSpec {
  std::size_t n_lat = 0;
  std::size_t n_lon = 0;
  std::vector<double> lat_deg;
  std::vector<double> lon_deg;

  std::size_t cells() const noexcept { return n_lat * n_lon; }
  bool operator==(const GridSpec&) const = default;
};

/// A single n_lat x n_lon spatial field, row-major.
struct Field {
  std::size_t n_lat = 0;
  std::size_t n_lon = 0;
  std::vector<double> values;

  static Field filled(const GridSpec& grid, double value) {
    return Field{grid.n_lat, grid.n_lon, std::vector<double>(grid.cells(), value)};
  }
  double at(std::size_t i, std::size_t j) const { return values[i * n_lon + j]; }
  bool matches(const GridSpec& grid) const {
    return n_lat == grid.n_lat && n_lon == grid.n_lon && values.size() == grid.cells();
  }
};

/// Throws InvalidArgument unless both counts are at least one.
GridSpec build_grid(long n_lat, long n_lon);

/// Checks the GridSpec invariants (ordering, range, cell-centre formula).
void validate_grid(const GridSpec& grid);

/// Cosine-latitude weights normalised so their mean over rows is one.
struct LatWeights {
  std::vector<double> w;
};

LatWeights lat_weights(const GridSpec& grid);
/// Same rule for an arbitrary list of row latitudes in (-90, 90).
LatWeights lat_weights(std::span<const double> lat_deg);

/// Weighted MSE of a single spatial field:
/// (1 / (n_lat * n_lon)) * sum_ij w_i * (pred_ij - truth_ij)^2.
double field_weighted_mse(std::span<const double> pred, std::span<const double> truth,
                          const GridSpec& grid, const LatWeights& weights);

/// Latitude-weighted MSE over a stack of fields (any number of leading
/// batch/time/variable axes flattened in front of the spatial block).
/// Throws ContractError on shape mismatch.
double weighted_mse(std::span<const double> pred, std::span<const double> truth,
                    const GridSpec& grid, const LatWeights& weights);

/// Mean over forecasts of the per-forecast weighted spatial RMSE (square root
/// taken per field, then averaged). Throws ContractError when empty.
double weighted_rmse(std::span<const double> pred, std::span<const double> truth,
                     const GridSpec& grid, const LatWeights& weights);

/// Latitude-weighted spatial mean of one field.
double weighted_mean(std::span<const double> field, const GridSpec& grid,
                     const LatWeights& weights);

}  // namespace climashift
