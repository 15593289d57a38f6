#pragma once

#include "delayrecon/core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace delayrecon::partition {

/// Uniform-weight point cloud; each row is one atom of mass 1/n.
struct EmpiricalMeasure {
    Matrix samples;

    Index size() const noexcept { return samples.rows(); }
    Index dimension() const noexcept { return samples.cols(); }
};

/// A full-state measure and its delay-space counterpart. Sample j on both sides comes from
/// source row source_rows[j].
struct MeasurePair {
    EmpiricalMeasure full;
    EmpiricalMeasure delayed;
    std::size_t cell_id = 0;
    std::vector<std::size_t> source_rows;
};

struct KMeansResult {
    std::vector<std::size_t> labels;
    Matrix centers;
    /// Within-cluster SSE after every centroid update, starting with the first.
    std::vector<double> sse_history;
    std::size_t iterations = 0;
};

/// Capacity of cluster k when N points are split into K balanced cells.
std::size_t cluster_capacity(std::size_t n_points, std::size_t n_clusters, std::size_t k) noexcept;

/// Balanced Lloyd iteration. Centers start from seeded k-means++; assignment walks all
/// (point, center) pairs by ascending distance and fills clusters up to their capacity.
/// An assignment that would raise the SSE against the current centers is rejected and the
/// iteration stops, so sse_history is non-increasing.
KMeansResult constrained_kmeans(const Matrix& points, std::size_t n_clusters, std::uint64_t seed,
                                std::size_t max_iters = 100);

/// Within-cluster sum of squared distances to the given centers.
double within_cluster_sse(const Matrix& points, const std::vector<std::size_t>& labels, const Matrix& centers);

/// Groups rows by label into paired measures, preserving time order. Empty cells are dropped.
std::vector<MeasurePair> build_measure_pairs(const Matrix& full_states, const Matrix& delay_states,
                                             const std::vector<std::size_t>& labels);

using SampleMap = std::function<Vector(const Vector&)>;

/// f#mu on an empirical measure: the map applied atom by atom, weights unchanged.
EmpiricalMeasure pushforward_empirical(const EmpiricalMeasure& measure, const SampleMap& map);

}  // namespace delayrecon::partition
