#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "seg/grid.hpp"
#include "seg/image.hpp"
#include "seg/model.hpp"
#include "seg/params.hpp"

namespace seg {

// Thrown when edge detection finds nothing to cluster.
class NoEdgesError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// 8-neighborhood offsets (row, col), clockwise from the upper-left corner.
inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets = {
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}}};

namespace detail {
inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }
}  // namespace detail

// Normalized weights of the 8 neighbors of pixel (r, c): each neighbor gets
// exp(kappa * (I - I_neighbor)^2) summed over channels, normalized so the 8
// weights add to 1. Larger kappa concentrates weight on dissimilar neighbors.
// Borders use replicate padding. Exponents are shifted by their maximum
// before exponentiation so large kappa cannot overflow.
inline std::array<double, 8> neighbor_weights(const ImageTensor& img, int r, int c, double kappa) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("neighbor_weights: kappa must be nonnegative");
    const int omega = img.channels();
    std::array<std::array<double, 3>, 8> exponents{};  // per neighbor, per channel (omega <= 3 fast path)
    std::vector<double> wide;                          // fallback storage for omega > 3
    if (omega > 3) wide.assign(static_cast<std::size_t>(8) * omega, 0.0);
    double max_exp = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < 8; ++l) {
        const int rr = detail::clamp_index(r + kNeighborOffsets[l][0], img.rows());
        const int cc = detail::clamp_index(c + kNeighborOffsets[l][1], img.cols());
        for (int k = 0; k < omega; ++k) {
            const double d = img.at(r, c, k) - img.at(rr, cc, k);
            const double e = kappa * d * d;
            if (omega > 3)
                wide[static_cast<std::size_t>(l) * omega + k] = e;
            else
                exponents[l][k] = e;
            max_exp = std::max(max_exp, e);
        }
    }
    std::array<double, 8> w{};
    double total = 0.0;
    for (int l = 0; l < 8; ++l) {
        double s = 0.0;
        for (int k = 0; k < omega; ++k) {
            const double e = omega > 3 ? wide[static_cast<std::size_t>(l) * omega + k] : exponents[l][k];
            s += std::exp(e - max_exp);
        }
        w[l] = s;
        total += s;
    }
    for (double& v : w) v /= total;
    return w;
}

// Weighted graph Laplacian of the image: at each pixel, the sum over the 8
// neighbors of weight * (I_neighbor - I), summed over channels. Constant
// images map to exactly zero; the response is largest beside intensity jumps.
inline Field graph_laplacian(const ImageTensor& img, double kappa) {
    Field out(img.rows(), img.cols());
    for (int r = 0; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) {
            const auto w = neighbor_weights(img, r, c, kappa);
            double acc = 0.0;
            for (int l = 0; l < 8; ++l) {
                const int rr = detail::clamp_index(r + kNeighborOffsets[l][0], img.rows());
                const int cc = detail::clamp_index(c + kNeighborOffsets[l][1], img.cols());
                double diff = 0.0;
                for (int k = 0; k < img.channels(); ++k) diff += img.at(rr, cc, k) - img.at(r, c, k);
                acc += w[l] * diff;
            }
            out(r, c) = acc;
        }
    }
    return out;
}

// Pixels where the Laplacian response exceeds sigma in magnitude.
inline Mask threshold_edges(const Field& lap, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("threshold_edges: sigma must be nonnegative");
    Mask m(lap.rows(), lap.cols(), 0);
    for (std::size_t i = 0; i < lap.size(); ++i) m[i] = std::abs(lap[i]) > sigma ? 1 : 0;
    return m;
}

// Edge pixel list with per-pixel intensity features.
struct EdgePixels {
    std::vector<int> row, col;
    std::vector<double> feat;  // [index * channels + k]
    int channels = 0;

    int size() const { return static_cast<int>(row.size()); }
    const double* feature(int i) const { return feat.data() + static_cast<std::size_t>(i) * channels; }
};

inline EdgePixels collect_edge_pixels(const ImageTensor& img, const Mask& mask) {
    if (mask.rows() != img.rows() || mask.cols() != img.cols())
        throw std::invalid_argument("collect_edge_pixels: shape mismatch");
    EdgePixels out;
    out.channels = img.channels();
    for (int r = 0; r < img.rows(); ++r)
        for (int c = 0; c < img.cols(); ++c)
            if (mask(r, c)) {
                out.row.push_back(r);
                out.col.push_back(c);
                for (int k = 0; k < img.channels(); ++k) out.feat.push_back(img.at(r, c, k));
            }
    return out;
}

// Deterministic k-means in intensity space. The first center is drawn from
// the seeded generator, the rest greedily maximize the distance to the chosen
// centers (ties break to the lowest index). Lloyd iterations run to a 1e-6
// centroid shift or 100 rounds; a cluster that empties is reseeded to the
// point farthest from its assigned center. Returns the m clusters as lists of
// indices into `pixels`, some possibly empty.
inline std::vector<std::vector<int>> kmeans_phases(const EdgePixels& pixels, int m,
                                                   std::uint64_t seed) {
    const int npts = pixels.size();
    const int dim = pixels.channels;
    if (m < 1) throw std::invalid_argument("kmeans_phases: m must be positive");
    if (npts < m)
        throw NoEdgesError("kmeans_phases: only " + std::to_string(npts) +
                           " edge pixels for " + std::to_string(m) + " clusters");

    auto dist2 = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double d = a[k] - b[k];
            s += d * d;
        }
        return s;
    };

    std::vector<double> centers(static_cast<std::size_t>(m) * dim);
    std::mt19937_64 rng(seed);
    const int first = static_cast<int>(rng() % static_cast<std::uint64_t>(npts));
    for (int k = 0; k < dim; ++k) centers[k] = pixels.feature(first)[k];

    // Greedy farthest-point completion of the initial centers.
    std::vector<double> min_d2(npts);
    for (int i = 0; i < npts; ++i) min_d2[i] = dist2(pixels.feature(i), centers.data());
    for (int cidx = 1; cidx < m; ++cidx) {
        int best = 0;
        for (int i = 1; i < npts; ++i)
            if (min_d2[i] > min_d2[best]) best = i;
        for (int k = 0; k < dim; ++k)
            centers[static_cast<std::size_t>(cidx) * dim + k] = pixels.feature(best)[k];
        for (int i = 0; i < npts; ++i)
            min_d2[i] = std::min(min_d2[i],
                                 dist2(pixels.feature(i), centers.data() + static_cast<std::size_t>(cidx) * dim));
    }

    std::vector<int> assign(npts, 0);
    for (int round = 0; round < 100; ++round) {
        // Assignment: nearest center, lowest index on ties.
        for (int i = 0; i < npts; ++i) {
            int best = 0;
            double best_d = dist2(pixels.feature(i), centers.data());
            for (int cidx = 1; cidx < m; ++cidx) {
                const double d = dist2(pixels.feature(i), centers.data() + static_cast<std::size_t>(cidx) * dim);
                if (d < best_d) {
                    best_d = d;
                    best = cidx;
                }
            }
            assign[i] = best;
        }

        std::vector<double> sums(static_cast<std::size_t>(m) * dim, 0.0);
        std::vector<int> counts(m, 0);
        for (int i = 0; i < npts; ++i) {
            ++counts[assign[i]];
            for (int k = 0; k < dim; ++k)
                sums[static_cast<std::size_t>(assign[i]) * dim + k] += pixels.feature(i)[k];
        }

        double max_shift2 = 0.0;
        std::vector<char> taken(npts, 0);
        for (int cidx = 0; cidx < m; ++cidx) {
            double* ctr = centers.data() + static_cast<std::size_t>(cidx) * dim;
            if (counts[cidx] == 0) {
                // Reseed to the point currently farthest from its own center.
                int far_i = -1;
                double far_d = -1.0;
                for (int i = 0; i < npts; ++i) {
                    if (taken[i]) continue;
                    const double d = dist2(pixels.feature(i),
                                           centers.data() + static_cast<std::size_t>(assign[i]) * dim);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                taken[far_i] = 1;
                double shift2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double nv = pixels.feature(far_i)[k];
                    const double d = nv - ctr[k];
                    shift2 += d * d;
                    ctr[k] = nv;
                }
                max_shift2 = std::max(max_shift2, shift2);
                continue;
            }
            double shift2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                const double nv = sums[static_cast<std::size_t>(cidx) * dim + k] / counts[cidx];
                const double d = nv - ctr[k];
                shift2 += d * d;
                ctr[k] = nv;
            }
            max_shift2 = std::max(max_shift2, shift2);
        }
        if (max_shift2 <= 1e-6 * 1e-6) break;
    }

    // Final assignment against the settled centers.
    std::vector<std::vector<int>> clusters(m);
    for (int i = 0; i < npts; ++i) {
        int best = 0;
        double best_d = dist2(pixels.feature(i), centers.data());
        for (int cidx = 1; cidx < m; ++cidx) {
            const double d = dist2(pixels.feature(i), centers.data() + static_cast<std::size_t>(cidx) * dim);
            if (d < best_d) {
                best_d = d;
                best = cidx;
            }
        }
        clusters[best].push_back(i);
    }
    return clusters;
}

// One synchronous sweep of the corner test: a set pixel survives iff two
// opposite corner neighborhoods both touch the set, where the corner triples
// are (upper-left, left, up), (upper-right, right, up), (lower-left, left,
// down) and (lower-right, right, down). Isolated pixels lose all four corners
// and are removed; pixels inside straight or diagonal runs keep an opposing
// pair. `reps` sweeps are applied.
inline Mask diagonal_denoise(const Mask& mask, int reps) {
    if (reps < 0) throw std::invalid_argument("diagonal_denoise: reps must be nonnegative");
    Mask cur = mask;
    const int R = mask.rows(), C = mask.cols();
    auto at = [&](const Mask& m, int r, int c) -> bool {
        return r >= 0 && r < R && c >= 0 && c < C && m(r, c) != 0;
    };
    for (int sweep = 0; sweep < reps; ++sweep) {
        Mask next(R, C, 0);
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                if (!cur(r, c)) continue;
                const bool ul = at(cur, r - 1, c - 1) || at(cur, r, c - 1) || at(cur, r - 1, c);
                const bool ur = at(cur, r - 1, c + 1) || at(cur, r, c + 1) || at(cur, r - 1, c);
                const bool dl = at(cur, r + 1, c - 1) || at(cur, r, c - 1) || at(cur, r + 1, c);
                const bool dr = at(cur, r + 1, c + 1) || at(cur, r, c + 1) || at(cur, r + 1, c);
                next(r, c) = ((ul && dr) || (ur && dl)) ? 1 : 0;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

// Full initialization pipeline: graph Laplacian, threshold, k-means on the
// edge pixels, then `repetitions` denoise sweeps per cluster. Returns the m
// cluster masks.
inline std::vector<Mask> init_phase_masks(const ImageTensor& img, const InitParams& params) {
    params.validate();
    const Field lap = graph_laplacian(img, params.kappa);
    const Mask edges = threshold_edges(lap, params.sigma);
    const EdgePixels pixels = collect_edge_pixels(img, edges);
    if (pixels.size() == 0)
        throw NoEdgesError("no edge pixels above sigma=" + std::to_string(params.sigma) +
                           "; try a smaller sigma");
    const auto clusters = kmeans_phases(pixels, params.phases, params.seed);
    std::vector<Mask> masks;
    masks.reserve(clusters.size());
    for (const auto& cluster : clusters) {
        Mask m(img.rows(), img.cols(), 0);
        for (int idx : cluster) m(pixels.row[idx], pixels.col[idx]) = 1;
        masks.push_back(diagonal_denoise(m, params.repetitions));
    }
    return masks;
}

// Builds the n = ceil(log2 m) binary phase fields from the m cluster masks.
// Masks are ordered by ascending pixel count (stable on ties); the smallest
// gets the all-zero code and the rest take the remaining codes in descending
// numeric order, so for m = 4 the masks map to codes 00, 11, 10, 01. Unused
// codes (when m < 2^n) simply never appear. Field i is the sum of the masks
// whose code has bit i set, clipped to 1 where masks overlap.
inline PhaseStack combine_phases(const std::vector<Mask>& masks) {
    const int m = static_cast<int>(masks.size());
    if (m < 2) throw std::invalid_argument("combine_phases: need at least 2 masks");
    for (const Mask& mk : masks)
        if (!mk.same_shape(masks.front()))
            throw std::invalid_argument("combine_phases: mask shapes differ");
    const int n = phase_count(m);

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> counts(m);
    for (int i = 0; i < m; ++i) counts[i] = mask_count(masks[i]);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return counts[a] < counts[b]; });

    std::vector<int> code_of(m);
    code_of[order[0]] = 0;
    for (int j = 1; j < m; ++j) code_of[order[j]] = (1 << n) - j;

    PhaseStack u(n, masks.front().rows(), masks.front().cols(), 0.0);
    for (int mi = 0; mi < m; ++mi) {
        const int code = code_of[mi];
        for (int i = 0; i < n; ++i) {
            if (!code_bit(code, i, n)) continue;
            Field& f = u[i];
            const Mask& mk = masks[mi];
            for (std::size_t px = 0; px < f.size(); ++px)
                if (mk[px]) f[px] = 1.0;
        }
    }
    return u;
}

}  // namespace seg
