#include "delayrecon/partition.hpp"
#include "delayrecon/random.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace delayrecon;
using namespace delayrecon::partition;

namespace {

Matrix column(std::initializer_list<double> v) {
    Matrix m(static_cast<Index>(v.size()), 1);
    Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

Matrix blobs(Index n, Index dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, dim);
    for (Index i = 0; i < n; ++i) {
        const double cx = static_cast<double>(i % 7) * 3.0;
        for (Index j = 0; j < dim; ++j) m(i, j) = cx + uniform01(rng) + (j == 0 ? 0.0 : uniform01(rng) * 5.0);
    }
    return m;
}

// Minimum within-cluster SSE over every labelling with exactly two points per cluster.
double brute_force_balanced_sse(const Matrix& p) {
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 16; ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) != 2) continue;
        double sse = 0.0;
        for (int side = 0; side < 2; ++side) {
            double sum = 0.0, sq = 0.0;
            int count = 0;
            for (int i = 0; i < 4; ++i) {
                if (((mask >> i) & 1) == side) {
                    sum += p(i, 0);
                    sq += p(i, 0) * p(i, 0);
                    ++count;
                }
            }
            sse += sq - sum * sum / count;
        }
        best = std::min(best, sse);
    }
    return best;
}

}  // namespace

TEST_CASE("four points split into the two obvious pairs") {
    const Matrix p = column({0.0, 0.1, 10.0, 10.1});
    const auto r = constrained_kmeans(p, 2, 1);
    CHECK(r.labels[0] == r.labels[1]);
    CHECK(r.labels[2] == r.labels[3]);
    CHECK(r.labels[0] != r.labels[2]);
    std::vector<double> centers{r.centers(0, 0), r.centers(1, 0)};
    std::sort(centers.begin(), centers.end());
    CHECK(centers[0] == doctest::Approx(0.05));
    CHECK(centers[1] == doctest::Approx(10.05));
    CHECK(within_cluster_sse(p, r.labels, r.centers) == doctest::Approx(brute_force_balanced_sse(p)));
}

TEST_CASE("degenerate cluster counts") {
    const Matrix p = blobs(37, 3, 2);
    const auto one = constrained_kmeans(p, 1, 0);
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](std::size_t l) { return l == 0; }));
    CHECK((one.centers.row(0) - p.colwise().mean()).norm() < 1e-12);

    const auto each = constrained_kmeans(p, 37, 0);
    std::vector<std::size_t> sorted = each.labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    for (Index i = 0; i < p.rows(); ++i) {
        CHECK((each.centers.row(static_cast<Index>(each.labels[static_cast<std::size_t>(i)])) - p.row(i)).norm() == 0.0);
    }

    CHECK_THROWS(constrained_kmeans(p, 38, 0));
    CHECK_THROWS(constrained_kmeans(p, 0, 0));
}

TEST_CASE("capacities follow floor plus remainder") {
    CHECK(cluster_capacity(10, 3, 0) == 4);
    CHECK(cluster_capacity(10, 3, 1) == 3);
    CHECK(cluster_capacity(10, 3, 2) == 3);
    CHECK(cluster_capacity(2000, 20, 19) == 100);
}

TEST_CASE("balance and SSE monotonicity on random data") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Index n = 1003 + static_cast<Index>(seed);
        const std::size_t k = 20;
        const Matrix p = blobs(n, 4, seed + 10);
        const auto r = constrained_kmeans(p, k, seed);
        std::vector<std::size_t> counts(k, 0);
        for (auto l : r.labels) ++counts[l];
        const auto lo = static_cast<std::size_t>(n) / k;
        for (auto c : counts) CHECK((c == lo || c == lo + 1));
        for (std::size_t i = 0; i < k; ++i) CHECK(counts[i] == cluster_capacity(static_cast<std::size_t>(n), k, i));

        REQUIRE_FALSE(r.sse_history.empty());
        for (std::size_t i = 1; i < r.sse_history.size(); ++i) {
            CHECK(r.sse_history[i] <= r.sse_history[i - 1] * (1.0 + 1e-9));
        }
        CHECK(r.sse_history.back() == doctest::Approx(within_cluster_sse(p, r.labels, r.centers)));

        const auto again = constrained_kmeans(p, k, seed);
        CHECK(again.labels == r.labels);
    }
}

TEST_CASE("measure pairs group rows by label in time order") {
    Matrix full(4, 2), delay(4, 3);
    full << 1, 1, 2, 2, 3, 3, 4, 4;
    delay << 10, 10, 10, 20, 20, 20, 30, 30, 30, 40, 40, 40;
    const auto pairs = build_measure_pairs(full, delay, {0, 0, 1, 1});
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].full.size() == 2);
    CHECK(pairs[1].delayed.samples(1, 0) == 40);
    CHECK(pairs[1].source_rows == std::vector<std::size_t>{2, 3});

    testing::CaptureWarnings w;
    const auto all = build_measure_pairs(full, delay, {3, 3, 3, 3});
    REQUIRE(all.size() == 1);
    CHECK(all[0].full.samples == full);
    CHECK(w.messages.size() == 3);

    const auto sparse = build_measure_pairs(full, delay, {0, 2, 2, 0});
    CHECK(sparse.size() == 2);
    CHECK_FALSE(w.messages.empty());

    CHECK_THROWS(build_measure_pairs(full, delay.topRows(3), {0, 0, 1}));
    CHECK_THROWS(build_measure_pairs(full, delay, {0, 0, 1}));
}

TEST_CASE("balanced pairs from a 2000-point clustering have 100 samples each") {
    const Matrix p = blobs(2000, 4, 77);
    const auto r = constrained_kmeans(p, 20, 3);
    const auto pairs = build_measure_pairs(p, p, r.labels);
    REQUIRE(pairs.size() == 20);
    for (const auto& pair : pairs) {
        CHECK(pair.full.size() == 100);
        // Mean of the measure equals the mean of the rows its cell selected.
        Vector mean = Vector::Zero(p.cols());
        for (auto row : pair.source_rows) mean += p.row(static_cast<Index>(row)).transpose();
        mean /= static_cast<double>(pair.source_rows.size());
        CHECK((pair.full.samples.colwise().mean().transpose() - mean).norm() < 1e-12);
    }
}

TEST_CASE("pushforward of empirical measures") {
    const EmpiricalMeasure mu{column({1.0, 2.0})};
    CHECK(pushforward_empirical(mu, [](const Vector& x) -> Vector { return x; }).samples == mu.samples);
    CHECK(pushforward_empirical(mu, [](const Vector& x) -> Vector { return 2.0 * x; }).samples == column({2.0, 4.0}));

    const EmpiricalMeasure nu{column({0.0, 1.0})};
    const SampleMap f = [](const Vector& x) -> Vector { return x.array() + 1.0; };
    const SampleMap g = [](const Vector& x) -> Vector { return 3.0 * x; };
    const auto composed = pushforward_empirical(nu, [&](const Vector& x) { return f(g(x)); });
    const auto nested = pushforward_empirical(pushforward_empirical(nu, g), f);
    CHECK(composed.samples == column({1.0, 4.0}));
    CHECK(nested.samples == composed.samples);

    const SampleMap lift = [](const Vector& x) -> Vector { return Vector::Constant(3, x[0]); };
    const auto lifted = pushforward_empirical(nu, lift);
    CHECK(lifted.size() == 2);
    CHECK(lifted.dimension() == 3);

    try {
        pushforward_empirical(nu, [](const Vector& x) -> Vector { return x.array().log(); });
        FAIL("expected non-finite error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find('0') != std::string::npos);
    }
}
