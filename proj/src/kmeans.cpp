#include "qclar/kmeans.hpp"

#include <array>
#include <random>

#include "qclar/errors.hpp"
#include "qclar/random.hpp"

namespace qclar {
namespace {

constexpr std::size_t kMaxIterations = 100;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

using Centroids = std::array<std::vector<double>, 2>;

Centroids centroids_of(std::span<const Embedding> points, std::span<const std::uint8_t> assign) {
  const std::size_t dim = points.front().dim();
  Centroids c{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::array<std::size_t, 2> count{0, 0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& dst = c[assign[i]];
    const auto v = points[i].values();
    for (std::size_t k = 0; k < dim; ++k) dst[k] += v[k];
    ++count[assign[i]];
  }
  for (int j = 0; j < 2; ++j) {
    if (count[j] == 0) continue;
    for (auto& x : c[j]) x /= static_cast<double>(count[j]);
  }
  return c;
}

// Moves the point farthest from its own centroid into an empty cluster.
void repair_empty(std::span<const Embedding> points, std::vector<std::uint8_t>& assign) {
  std::array<std::size_t, 2> count{0, 0};
  for (const auto a : assign) ++count[a];
  for (std::uint8_t empty = 0; empty < 2; ++empty) {
    if (count[empty] != 0) continue;
    const Centroids c = centroids_of(points, assign);
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = sq_dist(points[i].values(), c[assign[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --count[assign[far]];
    assign[far] = empty;
    ++count[empty];
  }
}

KMeansResult lloyd(std::span<const Embedding> points, Rng& rng) {
  const std::size_t n = points.size();
  // k-means++ seeding
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  const std::size_t c0 = first(rng);
  std::vector<double> weight(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = sq_dist(points[i].values(), points[c0].values());
    total += weight[i];
  }
  std::size_t c1 = c0 == 0 ? 1 : 0;
  if (total > 0.0) {
    std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
    c1 = pick(rng);
  }
  Centroids c{std::vector<double>(points[c0].values().begin(), points[c0].values().end()),
              std::vector<double>(points[c1].values().begin(), points[c1].values().end())};

  KMeansResult r;
  r.assignment.assign(n, 0);
  bool first_pass = true;
  for (r.iterations = 1; r.iterations <= kMaxIterations; ++r.iterations) {
    std::vector<std::uint8_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = sq_dist(points[i].values(), c[1]) < sq_dist(points[i].values(), c[0]) ? 1 : 0;
    }
    repair_empty(points, next);
    const bool stable = !first_pass && next == r.assignment;
    r.assignment = std::move(next);
    first_pass = false;
    if (stable) break;
    c = centroids_of(points, r.assignment);
  }
  r.iterations = std::min(r.iterations, kMaxIterations);
  if (r.assignment[0] == 1) {
    for (auto& a : r.assignment) a ^= 1;
  }
  r.sse = within_cluster_sse(points, r.assignment);
  return r;
}

}  // namespace

double within_cluster_sse(std::span<const Embedding> points,
                          std::span<const std::uint8_t> assignment) {
  if (points.empty()) return 0.0;
  const Centroids c = centroids_of(points, assignment);
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sse += sq_dist(points[i].values(), c[assignment[i]]);
  }
  return sse;
}

KMeansResult kmeans_2(std::span<const Embedding> points, std::uint64_t seed, std::size_t restarts) {
  if (points.size() < 2) {
    throw ValidationError("kmeans_2 needs at least 2 points, got " + std::to_string(points.size()));
  }
  const std::size_t dim = points.front().dim();
  for (const auto& p : points) {
    if (p.dim() != dim) {
      throw ValidationError("kmeans_2: mixed dimensions " + std::to_string(dim) + " and " +
                            std::to_string(p.dim()));
    }
  }
  KMeansResult best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    Rng rng(derive_seed(seed, r));
    KMeansResult candidate = lloyd(points, rng);
    if (r == 0 || candidate.sse < best.sse) {
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace qclar
