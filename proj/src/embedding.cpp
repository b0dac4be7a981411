#include "tret/embedding.hpp"

#include <cmath>
#include <string>

#include "tret/errors.hpp"

namespace tret {

void EmbeddingMatrix::append_row(std::span<const float> values) {
  if (static_cast<int>(values.size()) != dim_) {
    throw DataError("embedding row has dimension " + std::to_string(values.size()) +
                    ", expected " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::check(double tol) const {
  for (std::size_t i = 0; i < rows(); ++i) {
    double norm_sq = 0.0;
    for (float x : row(i)) {
      if (!std::isfinite(x)) {
        throw DataError("embedding row " + std::to_string(i) + " has non-finite entries");
      }
      norm_sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (std::abs(std::sqrt(norm_sq) - 1.0) > tol) {
      throw DataError("embedding row " + std::to_string(i) + " is not unit norm");
    }
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace tret
