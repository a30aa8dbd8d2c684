#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "seg/driver.hpp"
#include "seg/init.hpp"
#include "seg/synthetic.hpp"

using namespace seg;

namespace {

ImageTensor constant_image(int rows, int cols, double value) {
    return ImageTensor(rows, cols, 1, value);
}

// Exhaustive 1D k-means oracle: every partition of the sorted points into m
// contiguous runs, minimal within-cluster sum of squares.
double best_sse_1d(std::vector<double> pts, int m) {
    std::sort(pts.begin(), pts.end());
    const int n = static_cast<int>(pts.size());
    std::vector<double> prefix(n + 1, 0.0), prefix2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + pts[i];
        prefix2[i + 1] = prefix2[i] + pts[i] * pts[i];
    }
    auto sse = [&](int lo, int hi) {  // [lo, hi)
        const int cnt = hi - lo;
        const double s = prefix[hi] - prefix[lo];
        return (prefix2[hi] - prefix2[lo]) - s * s / cnt;
    };
    std::vector<std::vector<double>> dp(m + 1, std::vector<double>(n + 1, 1e300));
    dp[0][0] = 0.0;
    for (int k = 1; k <= m; ++k)
        for (int i = k; i <= n; ++i)
            for (int j = k - 1; j < i; ++j) dp[k][i] = std::min(dp[k][i], dp[k - 1][j] + sse(j, i));
    return dp[m][n];
}

double cluster_sse(const EdgePixels& pixels, const std::vector<std::vector<int>>& clusters) {
    double total = 0.0;
    for (const auto& cluster : clusters) {
        if (cluster.empty()) continue;
        std::vector<double> mean(pixels.channels, 0.0);
        for (int idx : cluster)
            for (int k = 0; k < pixels.channels; ++k) mean[k] += pixels.feature(idx)[k];
        for (double& v : mean) v /= static_cast<double>(cluster.size());
        for (int idx : cluster)
            for (int k = 0; k < pixels.channels; ++k) {
                const double d = pixels.feature(idx)[k] - mean[k];
                total += d * d;
            }
    }
    return total;
}

EdgePixels make_pixels(const std::vector<double>& feats) {
    EdgePixels p;
    p.channels = 1;
    for (int i = 0; i < static_cast<int>(feats.size()); ++i) {
        p.row.push_back(0);
        p.col.push_back(i);
        p.feat.push_back(feats[i]);
    }
    return p;
}

}  // namespace

TEST_CASE("neighbor weights are uniform for flat images and zero sharpness") {
    const ImageTensor flat = constant_image(5, 5, 0.4);
    const auto w1 = neighbor_weights(flat, 2, 2, 50.0);
    for (double v : w1) CHECK(v == Catch::Approx(0.125).margin(1e-15));
    // kappa = 0 ignores the intensities entirely.
    const LabeledImage scene = blocks_image(8, 8);
    const auto w2 = neighbor_weights(scene.image, 3, 3, 0.0);
    for (double v : w2) CHECK(v == Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("neighbor weights favor dissimilar neighbors and survive huge kappa") {
    ImageTensor img = constant_image(3, 3, 0.0);
    img.at(1, 2, 0) = 1.0;  // one bright neighbor to the right of the center
    const auto w = neighbor_weights(img, 1, 1, 50.0);
    double total = 0.0;
    for (double v : w) total += v;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    // Offset index 3 is (0, +1): the bright pixel takes almost all the mass.
    CHECK(w[3] > 0.99);
    // kappa large enough to overflow exp without the max-shift.
    const auto w_huge = neighbor_weights(img, 1, 1, 2000.0);
    CHECK(std::isfinite(w_huge[3]));
    CHECK(w_huge[3] > 0.999);
}

TEST_CASE("graph Laplacian: flat image gives exact zeros") {
    const Field lap = graph_laplacian(constant_image(6, 7, 0.77), 50.0);
    for (double v : lap) CHECK(v == 0.0);
}

TEST_CASE("graph Laplacian: single bright pixel at zero sharpness") {
    ImageTensor img = constant_image(7, 7, 0.0);
    img.at(3, 3, 0) = 1.0;
    const Field lap = graph_laplacian(img, 0.0);
    // At the bright pixel all 8 neighbors are darker by 1: (1/8) * 8 * (-1).
    CHECK(lap(3, 3) == Catch::Approx(-1.0).margin(1e-14));
    // Each 8-neighbor sees the bright pixel once: +1/8.
    CHECK(lap(2, 2) == Catch::Approx(0.125).margin(1e-14));
    CHECK(lap(3, 2) == Catch::Approx(0.125).margin(1e-14));
    // Pixels beyond the 8-neighborhood are untouched.
    CHECK(lap(0, 0) == 0.0);
    CHECK(lap(3, 5) == 0.0);
}

TEST_CASE("graph Laplacian + threshold find exactly the two columns at a step edge") {
    const int rows = 6, cols = 10, split = 5;
    ImageTensor img(rows, cols, 1, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = split; c < cols; ++c) img.at(r, c, 0) = 1.0;
    const Field lap = graph_laplacian(img, 0.0);
    // Left of the jump three of eight neighbors are brighter by 1.
    for (int r = 0; r < rows; ++r) {
        CHECK(lap(r, split - 1) == Catch::Approx(0.375).margin(1e-14));
        CHECK(lap(r, split) == Catch::Approx(-0.375).margin(1e-14));
    }
    const Mask edges = threshold_edges(lap, 0.2);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            CHECK(static_cast<int>(edges(r, c)) == ((c == split - 1 || c == split) ? 1 : 0));
}

TEST_CASE("threshold is strict") {
    Field lap(1, 3, 0.0);
    lap(0, 0) = 0.05;
    lap(0, 1) = -0.0500000001;
    lap(0, 2) = 0.049;
    const Mask m = threshold_edges(lap, 0.05);
    CHECK(m(0, 0) == 0);  // equal is not above
    CHECK(m(0, 1) == 1);
    CHECK(m(0, 2) == 0);
}

TEST_CASE("collect_edge_pixels walks in row-major order with features attached") {
    ImageTensor img(2, 3, 2, 0.0);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
            img.at(r, c, 0) = 0.1 * (r * 3 + c);
            img.at(r, c, 1) = 1.0 - 0.1 * (r * 3 + c);
        }
    Mask mask(2, 3, 0);
    mask(0, 1) = 1;
    mask(1, 2) = 1;
    const EdgePixels p = collect_edge_pixels(img, mask);
    REQUIRE(p.size() == 2);
    CHECK(p.row[0] == 0);
    CHECK(p.col[0] == 1);
    CHECK(p.row[1] == 1);
    CHECK(p.col[1] == 2);
    CHECK(p.feature(0)[0] == Catch::Approx(0.1));
    CHECK(p.feature(0)[1] == Catch::Approx(0.9));
    CHECK(p.feature(1)[0] == Catch::Approx(0.5));
    CHECK(p.feature(1)[1] == Catch::Approx(0.5));
}

TEST_CASE("k-means matches the exhaustive 1D oracle on a three-group line") {
    const std::vector<double> feats = {0.0, 0.01, 0.5, 0.51, 0.99, 1.0};
    const EdgePixels pixels = make_pixels(feats);
    const auto clusters = kmeans_phases(pixels, 3, 1);
    CHECK(cluster_sse(pixels, clusters) == Catch::Approx(best_sse_1d(feats, 3)).margin(1e-12));
    // The groups must be the three obvious pairs (as sets of indices).
    std::set<std::set<int>> got;
    for (const auto& cl : clusters) got.insert(std::set<int>(cl.begin(), cl.end()));
    const std::set<std::set<int>> expected = {{0, 1}, {2, 3}, {4, 5}};
    CHECK(got == expected);
}

TEST_CASE("k-means is deterministic in the seed and covers every point once") {
    std::vector<double> feats;
    for (int i = 0; i < 60; ++i) feats.push_back(std::fmod(i * 0.37, 1.0));
    const EdgePixels pixels = make_pixels(feats);
    const auto a = kmeans_phases(pixels, 4, 42);
    const auto b = kmeans_phases(pixels, 4, 42);
    CHECK(a == b);
    std::vector<int> seen(feats.size(), 0);
    for (const auto& cl : a)
        for (int idx : cl) ++seen[idx];
    for (int s : seen) CHECK(s == 1);
}

TEST_CASE("k-means tolerates identical points and too few points") {
    const EdgePixels same = make_pixels({0.5, 0.5, 0.5, 0.5});
    const auto clusters = kmeans_phases(same, 2, 7);
    int covered = 0;
    for (const auto& cl : clusters) covered += static_cast<int>(cl.size());
    CHECK(covered == 4);
    const EdgePixels tiny = make_pixels({0.1, 0.9});
    CHECK_THROWS_AS(kmeans_phases(tiny, 3, 1), NoEdgesError);
    CHECK_THROWS_AS(kmeans_phases(tiny, 0, 1), std::invalid_argument);
}

TEST_CASE("diagonal denoise removes isolated pixels and keeps runs") {
    Mask m(7, 9, 0);
    m(1, 1) = 1;                            // isolated
    for (int c = 2; c <= 6; ++c) m(4, c) = 1;  // horizontal run
    for (int i = 0; i < 4; ++i) m(2 + i, 7 - i) = 1;  // diagonal run (falling col)
    const Mask once = diagonal_denoise(m, 1);
    CHECK(once(1, 1) == 0);
    // Interior of the horizontal run survives (left and right both set).
    for (int c = 3; c <= 5; ++c) CHECK(once(4, c) == 1);
    // Interior of the diagonal run survives via the opposite corners.
    CHECK(once(3, 6) == 1);
    CHECK(once(4, 5) == 1);
    // Zero sweeps is the identity.
    const Mask zero = diagonal_denoise(m, 0);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(zero[i] == m[i]);
}

TEST_CASE("diagonal denoise clears scattered salt in at most two sweeps") {
    Mask m(20, 20, 0);
    for (int c = 0; c < 20; ++c) m(10, c) = 1;  // a line to keep
    // Salt: isolated pixels far from the line and from each other.
    const int salt[][2] = {{2, 3}, {4, 15}, {6, 8}, {15, 2}, {17, 17}, {13, 9}};
    for (auto& s : salt) m(s[0], s[1]) = 1;
    const Mask cleaned = diagonal_denoise(m, 2);
    for (auto& s : salt) CHECK(cleaned(s[0], s[1]) == 0);
    // Each sweep erodes one pixel from every run end, so the line keeps its
    // middle 16 pixels.
    for (int c = 2; c < 18; ++c) CHECK(cleaned(10, c) == 1);
}

TEST_CASE("combine_phases assigns codes by ascending mask size") {
    // Four disjoint masks with strictly increasing pixel counts.
    const int rows = 8, cols = 8;
    std::vector<Mask> masks(4, Mask(rows, cols, 0));
    auto fill_row = [&](Mask& m, int r, int count) {
        for (int c = 0; c < count; ++c) m(r, c) = 1;
    };
    fill_row(masks[0], 0, 2);  // smallest -> code 00
    fill_row(masks[1], 1, 3);  // -> code 11
    fill_row(masks[2], 2, 4);  // -> code 10
    fill_row(masks[3], 3, 5);  // -> code 01
    const PhaseStack u = combine_phases(masks);
    REQUIRE(u.n() == 2);
    const LabelMap labels = extract_labels(u);
    CHECK(labels(0, 0) == 0);
    CHECK(labels(1, 0) == 3);
    CHECK(labels(2, 0) == 2);
    CHECK(labels(3, 0) == 1);
    CHECK(labels(7, 7) == 0);  // background has no mask set
}

TEST_CASE("combine_phases: ties keep the input order, m=3 and m=6 shapes") {
    std::vector<Mask> masks3(3, Mask(4, 4, 0));
    masks3[0](0, 0) = 1;  // count 1 (first of the tie -> smaller slot)
    masks3[1](1, 0) = 1;  // count 1
    masks3[2](2, 0) = masks3[2](2, 1) = 1;  // count 2
    const PhaseStack u3 = combine_phases(masks3);
    REQUIRE(u3.n() == 2);
    const LabelMap l3 = extract_labels(u3);
    CHECK(l3(0, 0) == 0);  // order[0] = mask 0 -> code 0
    CHECK(l3(1, 0) == 3);  // order[1] = mask 1 -> code 3
    CHECK(l3(2, 0) == 2);  // order[2] = mask 2 -> code 2

    std::vector<Mask> masks6(6, Mask(8, 8, 0));
    for (int i = 0; i < 6; ++i)
        for (int c = 0; c <= i; ++c) masks6[i](i, c) = 1;
    const PhaseStack u6 = combine_phases(masks6);
    REQUIRE(u6.n() == 3);
    const LabelMap l6 = extract_labels(u6);
    const int expected[6] = {0, 7, 6, 5, 4, 3};
    for (int i = 0; i < 6; ++i) CHECK(l6(i, 0) == expected[i]);
}

TEST_CASE("combine_phases clips overlapping masks to one") {
    std::vector<Mask> masks(2, Mask(2, 2, 0));
    masks[0](0, 0) = 1;
    masks[1](0, 0) = 1;  // overlap
    masks[1](0, 1) = 1;
    const PhaseStack u = combine_phases(masks);
    REQUIRE(u.n() == 1);
    CHECK(u[0](0, 0) == 1.0);
    CHECK(u[0](0, 1) == 1.0);
    CHECK(u[0](1, 0) == 0.0);
}

TEST_CASE("the full pipeline masks the block boundaries of the four-block image") {
    const LabeledImage scene = blocks_image(32, 32);
    InitParams params;
    params.kappa = 50.0;
    params.sigma = 0.05;
    params.repetitions = 1;
    params.phases = 4;
    params.seed = 1;
    const std::vector<Mask> masks = init_phase_masks(scene.image, params);
    REQUIRE(masks.size() == 4);
    std::size_t covered = 0;
    for (const Mask& m : masks) {
        covered += mask_count(m);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c)
                if (m(r, c)) {
                    // Every retained pixel hugs a block boundary line.
                    const double dist =
                        std::min(std::abs(r - 15.5), std::abs(c - 15.5));
                    CHECK(dist <= 2.0);
                }
    }
    CHECK(covered > 0);
    const PhaseStack u0 = combine_phases(masks);
    CHECK(u0.n() == 2);
}

TEST_CASE("init_phase_masks reports featureless images") {
    InitParams params;
    CHECK_THROWS_AS(init_phase_masks(constant_image(16, 16, 0.5), params), NoEdgesError);
}
