#include "nnn/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <utility>

#include "nnn/error.hpp"

namespace nnn {

namespace {

constexpr std::size_t kLeafSize = 8;

using candidate = std::pair<double, std::size_t>;  // (squared distance, id); lexicographic order

void check_neighbor_count(std::size_t n, std::size_t m, bool excluding) {
  const std::size_t eligible = excluding ? n - 1 : n;
  if (m == 0 || m > eligible) {
    throw error(error_code::not_enough_neighbors,
                "requested " + std::to_string(m) + " neighbors but only " +
                    std::to_string(eligible) + " samples are eligible");
  }
}

neighbor_list to_list(point2 query, std::vector<candidate> found) {
  std::sort(found.begin(), found.end());
  neighbor_list out;
  out.query = query;
  out.indices.reserve(found.size());
  out.distances.reserve(found.size());
  for (const auto& [d2, id] : found) {
    out.indices.push_back(id);
    out.distances.push_back(std::sqrt(d2));
  }
  return out;
}

}  // namespace

sample_set::sample_set(std::vector<sample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.id != i) {
      throw error(error_code::invalid_sample,
                  "sample ids must be contiguous from 0; found id " + std::to_string(s.id) +
                      " at position " + std::to_string(i));
    }
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.value)) {
      throw error(error_code::invalid_sample, "sample " + std::to_string(i) + " is not finite");
    }
  }
}

sample_set sample_set::from_columns(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> values) {
  if (x.size() != y.size() || x.size() != values.size()) {
    throw error(error_code::invalid_sample, "coordinate and value columns differ in length");
  }
  std::vector<sample> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {i, x[i], y[i], values[i]};
  return sample_set(std::move(out));
}

sample_set sample_set::subset(std::span<const std::size_t> ids) const {
  std::vector<sample> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    sample s = samples_.at(id);
    s.id = out.size();
    out.push_back(s);
  }
  return sample_set(std::move(out));
}

spatial_index::spatial_index(sample_set samples) : samples_(std::move(samples)) {
  const std::size_t n = samples_.size();
  if (n < 2) {
    throw error(error_code::too_few_samples,
                "at least 2 samples are required, got " + std::to_string(n));
  }

  std::set<std::pair<double, double>> seen;
  for (const auto& s : samples_) {
    if (!seen.emplace(s.x, s.y).second) {
      throw error(error_code::duplicate_coordinate,
                  "sample " + std::to_string(s.id) + " repeats coordinates (" +
                      std::to_string(s.x) + ", " + std::to_string(s.y) + ")");
    }
  }

  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * n / kLeafSize + 2);
  build(0, n);

  points_.resize(n);
  for (std::size_t k = 0; k < n; ++k) points_[k] = samples_[order_[k]].position();
}

std::size_t spatial_index::build(std::size_t begin, std::size_t end) {
  const std::size_t self = nodes_.size();
  nodes_.push_back({});
  nodes_[self].begin = begin;
  nodes_[self].end = end;
  if (end - begin <= kLeafSize) return self;

  // Split along the axis with the wider spread.
  double lo[2] = {samples_[order_[begin]].x, samples_[order_[begin]].y};
  double hi[2] = {lo[0], lo[1]};
  for (std::size_t k = begin; k < end; ++k) {
    const auto& s = samples_[order_[k]];
    lo[0] = std::min(lo[0], s.x);
    hi[0] = std::max(hi[0], s.x);
    lo[1] = std::min(lo[1], s.y);
    hi[1] = std::max(hi[1], s.y);
  }
  const int axis = (hi[0] - lo[0] >= hi[1] - lo[1]) ? 0 : 1;
  auto coord = [&](std::size_t id) { return axis == 0 ? samples_[id].x : samples_[id].y; };

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double ca = coord(a), cb = coord(b);
                     return ca < cb || (ca == cb && a < b);
                   });

  const double split = coord(order_[mid]);
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[self].axis = axis;
  nodes_[self].split = split;
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

neighbor_list spatial_index::knn(point2 query, std::size_t m,
                                 std::optional<std::size_t> exclude) const {
  check_neighbor_count(samples_.size(), m, exclude.has_value() && *exclude < samples_.size());

  // Max-heap on (d2, id): the top is the current worst accepted candidate.
  std::priority_queue<candidate> best;

  auto consider = [&](std::size_t k) {
    const std::size_t id = order_[k];
    if (exclude && *exclude == id) return;
    const candidate c{squared_distance(query, points_[k]), id};
    if (best.size() < m) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  // Explicit stack of (node, lower bound on squared distance to anything inside it).
  std::vector<std::pair<std::size_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [index, bound] = stack.back();
    stack.pop_back();
    // Strict comparison keeps equal-distance subtrees alive for the id tie-break.
    if (best.size() == m && bound > best.top().first) continue;

    const node& nd = nodes_[index];
    if (nd.axis < 0) {
      for (std::size_t k = nd.begin; k < nd.end; ++k) consider(k);
      continue;
    }
    const double q = nd.axis == 0 ? query.x : query.y;
    const double diff = q - nd.split;
    const std::size_t near = diff < 0 ? nd.left : nd.right;
    const std::size_t far = diff < 0 ? nd.right : nd.left;
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }

  std::vector<candidate> found;
  found.reserve(best.size());
  while (!best.empty()) {
    found.push_back(best.top());
    best.pop();
  }
  return to_list(query, std::move(found));
}

neighbor_list brute_force_knn(const sample_set& samples, point2 query, std::size_t m,
                              std::optional<std::size_t> exclude) {
  check_neighbor_count(samples.size(), m, exclude.has_value() && *exclude < samples.size());
  std::vector<candidate> all;
  all.reserve(samples.size());
  for (const auto& s : samples) {
    if (exclude && *exclude == s.id) continue;
    all.emplace_back(squared_distance(query, s.position()), s.id);
  }
  std::sort(all.begin(), all.end());
  all.resize(m);
  return to_list(query, std::move(all));
}

}  // namespace nnn
