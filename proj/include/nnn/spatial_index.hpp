#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nnn {

struct point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const point2&, const point2&) = default;
};

/// One known location with its measured property value (porosity fraction by convention).
struct sample {
  std::size_t id = 0;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;

  point2 position() const { return {x, y}; }
};

/// Ordered collection of samples whose ids equal their positions (0..N-1).
class sample_set {
public:
  sample_set() = default;

  // Throws invalid_sample on non-finite values or ids that are not 0..N-1 in order.
  explicit sample_set(std::vector<sample> samples);

  // Assigns ids 0..N-1 in the given order.
  static sample_set from_columns(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> values);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<sample>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  // Subset re-indexed to 0..k-1 in the order of `ids`.
  sample_set subset(std::span<const std::size_t> ids) const;

private:
  std::vector<sample> samples_;
};

struct neighbor_list {
  point2 query;
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
};

/// Squared Euclidean distance; the index and every oracle use this exact expression.
inline double squared_distance(point2 a, point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Static 2-D k-d tree over a sample set answering exact k-nearest-neighbor queries.
///
/// Results are ordered by (distance, sample id), so ties always resolve to the smaller id
/// and the output never depends on the tree layout. Immutable after construction; concurrent
/// queries are safe.
class spatial_index {
public:
  // Throws too_few_samples (N < 2) or duplicate_coordinate.
  explicit spatial_index(sample_set samples);

  const sample_set& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  // Throws not_enough_neighbors if m == 0 or m exceeds the eligible sample count.
  neighbor_list knn(point2 query, std::size_t m,
                    std::optional<std::size_t> exclude = std::nullopt) const;

private:
  struct node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);

  sample_set samples_;
  std::vector<std::size_t> order_;
  std::vector<point2> points_;  // points_[k] is the position of samples_[order_[k]]
  std::vector<node> nodes_;
};

/// Reference k-nearest-neighbor search by sorting every distance. Used as an oracle.
neighbor_list brute_force_knn(const sample_set& samples, point2 query, std::size_t m,
                              std::optional<std::size_t> exclude = std::nullopt);

}  // namespace nnn
