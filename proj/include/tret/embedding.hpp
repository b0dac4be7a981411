#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tret {

// Dense row-major matrix of d-dimensional embeddings, float32 storage.
// Rows are expected to be unit L2 norm (within 1e-6) and finite; callers
// at module boundaries run check().
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(int dim, std::size_t rows) : dim_(dim), data_(rows * static_cast<std::size_t>(dim), 0.0f) {}

  int dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<float> row(std::size_t i) {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  void append_row(std::span<const float> values);

  // Throws DataError unless every row is finite and unit-norm within tol.
  void check(double tol = 1e-4) const;

 private:
  int dim_ = 0;
  std::vector<float> data_;
};

// Dot product of two rows; with unit-norm inputs this is cosine similarity.
double dot(std::span<const float> a, std::span<const float> b);

// Squared euclidean distance, accumulated in double.
double squared_distance(std::span<const float> a, std::span<const float> b);

}  // namespace tret
