#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qclar/embedding_store.hpp"

namespace qclar {

struct KMeansResult {
  std::vector<std::uint8_t> assignment;  // cluster 0 or 1 per point; point 0 is always in cluster 0
  double sse = 0.0;                      // within-cluster sum of squared Euclidean distances
  std::size_t iterations = 0;            // Lloyd iterations of the winning restart
};

// Two-means clustering: k-means++ seeding, Lloyd iterations until the assignment
// is stable (at most 100), empty clusters repaired by moving the point farthest
// from its centroid. The lowest-SSE result over `restarts` seeded runs is kept.
// Both clusters are non-empty. Throws ValidationError for fewer than 2 points.
KMeansResult kmeans_2(std::span<const Embedding> points, std::uint64_t seed,
                      std::size_t restarts = 10);

double within_cluster_sse(std::span<const Embedding> points,
                          std::span<const std::uint8_t> assignment);

}  // namespace qclar
