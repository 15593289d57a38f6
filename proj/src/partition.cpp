#include "delayrecon/partition.hpp"
#include "delayrecon/random.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace delayrecon::partition {

namespace {

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const Index n = points.rows();
    Matrix centers(static_cast<Index>(k), points.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);

    auto first = static_cast<Index>(uniform01(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centers.row(0) = points.row(first);
    chosen[static_cast<std::size_t>(first)] = true;

    Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = -1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                // Rounding pushed the target past the end; take the last point with mass.
                for (Index i = n - 1; i >= 0; --i) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            for (Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(static_cast<Index>(c)) = points.row(pick);
        chosen[static_cast<std::size_t>(pick)] = true;
        d2 = d2.cwiseMin((points.rowwise() - centers.row(static_cast<Index>(c))).rowwise().squaredNorm());
    }
    return centers;
}

struct Candidate {
    double dist;
    std::uint32_t point;
    std::uint32_t center;
};

std::vector<std::size_t> balanced_assignment(const Matrix& points, const Matrix& centers) {
    const auto n = static_cast<std::size_t>(points.rows());
    const auto k = static_cast<std::size_t>(centers.rows());
    std::vector<Candidate> cands;
    cands.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            const double d = (points.row(static_cast<Index>(i)) - centers.row(static_cast<Index>(c))).squaredNorm();
            cands.push_back({d, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(c)});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.point != b.point) return a.point < b.point;
        return a.center < b.center;
    });

    std::vector<std::size_t> remaining(k);
    for (std::size_t c = 0; c < k; ++c) remaining[c] = cluster_capacity(n, k, c);
    constexpr std::size_t unassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> labels(n, unassigned);
    std::size_t left = n;
    for (const Candidate& cand : cands) {
        if (left == 0) break;
        if (labels[cand.point] != unassigned || remaining[cand.center] == 0) continue;
        labels[cand.point] = cand.center;
        --remaining[cand.center];
        --left;
    }
    return labels;
}

Matrix cluster_means(const Matrix& points, const std::vector<std::size_t>& labels, std::size_t k) {
    Matrix sums = Matrix::Zero(static_cast<Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sums.row(static_cast<Index>(labels[i])) += points.row(static_cast<Index>(i));
        ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        sums.row(static_cast<Index>(c)) /= static_cast<double>(counts[c]);
    }
    return sums;
}

}  // namespace

std::size_t cluster_capacity(std::size_t n_points, std::size_t n_clusters, std::size_t k) noexcept {
    return n_points / n_clusters + (k < n_points % n_clusters ? 1 : 0);
}

double within_cluster_sse(const Matrix& points, const std::vector<std::size_t>& labels, const Matrix& centers) {
    double sse = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sse += (points.row(static_cast<Index>(i)) - centers.row(static_cast<Index>(labels[i]))).squaredNorm();
    }
    return sse;
}

KMeansResult constrained_kmeans(const Matrix& points, std::size_t n_clusters, std::uint64_t seed,
                                std::size_t max_iters) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n_clusters < 1) throw std::invalid_argument("constrained_kmeans needs K >= 1");
    if (n_clusters > n) {
        throw std::invalid_argument("constrained_kmeans: K=" + std::to_string(n_clusters) + " exceeds N=" +
                                    std::to_string(n));
    }
    if (!points.allFinite()) throw std::invalid_argument("constrained_kmeans: points must be finite");

    Rng rng(seed);
    KMeansResult result;
    result.centers = kmeans_plus_plus(points, n_clusters, rng);

    for (std::size_t it = 0; it < std::max<std::size_t>(max_iters, 1); ++it) {
        std::vector<std::size_t> labels = balanced_assignment(points, result.centers);
        if (!result.labels.empty()) {
            if (labels == result.labels) break;
            if (within_cluster_sse(points, labels, result.centers) >
                within_cluster_sse(points, result.labels, result.centers)) {
                break;
            }
        }
        result.labels = std::move(labels);
        result.centers = cluster_means(points, result.labels, n_clusters);
        result.sse_history.push_back(within_cluster_sse(points, result.labels, result.centers));
        ++result.iterations;
    }
    return result;
}

std::vector<MeasurePair> build_measure_pairs(const Matrix& full_states, const Matrix& delay_states,
                                             const std::vector<std::size_t>& labels) {
    if (full_states.rows() != delay_states.rows() || static_cast<std::size_t>(full_states.rows()) != labels.size()) {
        throw std::invalid_argument("build_measure_pairs: full states (" + std::to_string(full_states.rows()) +
                                    "), delay states (" + std::to_string(delay_states.rows()) + ") and labels (" +
                                    std::to_string(labels.size()) + ") must have equal length");
    }
    if (labels.empty()) return {};
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    std::vector<MeasurePair> pairs;
    for (std::size_t c = 0; c < k; ++c) {
        if (members[c].empty()) {
            warn("cell " + std::to_string(c) + " is empty and was dropped");
            continue;
        }
        MeasurePair pair;
        pair.cell_id = c;
        pair.source_rows = members[c];
        const auto size = static_cast<Index>(members[c].size());
        pair.full.samples.resize(size, full_states.cols());
        pair.delayed.samples.resize(size, delay_states.cols());
        for (Index j = 0; j < size; ++j) {
            const auto row = static_cast<Index>(members[c][static_cast<std::size_t>(j)]);
            pair.full.samples.row(j) = full_states.row(row);
            pair.delayed.samples.row(j) = delay_states.row(row);
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

EmpiricalMeasure pushforward_empirical(const EmpiricalMeasure& measure, const SampleMap& map) {
    EmpiricalMeasure out;
    for (Index j = 0; j < measure.size(); ++j) {
        Vector image = map(measure.samples.row(j).transpose());
        if (j == 0) out.samples.resize(measure.size(), image.size());
        if (image.size() != out.samples.cols()) {
            throw std::invalid_argument("pushforward map changed output dimension at sample " + std::to_string(j));
        }
        if (!image.allFinite()) {
            throw NumericError("pushforward produced a non-finite value at sample " + std::to_string(j));
        }
        out.samples.row(j) = image.transpose();
    }
    return out;
}

}  // namespace delayrecon::partition
