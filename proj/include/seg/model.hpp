#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "seg/grid.hpp"
#include "seg/image.hpp"
#include "seg/laplacian.hpp"
#include "seg/parallel.hpp"
#include "seg/params.hpp"

namespace seg {

// ---------------------------------------------------------------------------
// Region coding
//
// n phase fields u_1..u_n partition the image into up to 2^n regions. Each
// region is addressed by an n-bit code; field i contributes the bit at
// position n-1-i, so field 0 is the most significant bit and the code read
// left to right lists the fields in order. A pixel belongs to the region
// whose bits are (u_i > 1/2).
// ---------------------------------------------------------------------------

constexpr int kMaxPhaseFields = 16;

inline int region_count(int n) {
    if (n < 1 || n > kMaxPhaseFields)
        throw std::invalid_argument("region_count: phase count out of range");
    return 1 << n;
}

inline bool code_bit(int code, int i, int n) { return (code >> (n - 1 - i)) & 1; }

inline int flip_code(int code, int i, int n) { return code ^ (1 << (n - 1 - i)); }

// A stack of n phase fields over a common grid.
struct PhaseStack {
    std::vector<Field> fields;

    PhaseStack() = default;
    PhaseStack(int n, int rows, int cols, double value = 0.0) {
        if (n < 1 || n > kMaxPhaseFields)
            throw std::invalid_argument("PhaseStack: phase count out of range");
        fields.assign(n, Field(rows, cols, value));
    }

    int n() const { return static_cast<int>(fields.size()); }
    int rows() const { return fields.empty() ? 0 : fields.front().rows(); }
    int cols() const { return fields.empty() ? 0 : fields.front().cols(); }

    Field& operator[](int i) { return fields[i]; }
    const Field& operator[](int i) const { return fields[i]; }
};

// Mean intensity per region code, `channels` values per code.
struct RegionMeans {
    int n = 0;         // number of phase fields
    int channels = 0;  // image channels
    std::vector<double> values;  // [code * channels + k]

    RegionMeans() = default;
    RegionMeans(int n_, int channels_, double value = 0.0) : n(n_), channels(channels_) {
        values.assign(static_cast<std::size_t>(region_count(n_)) * channels_, value);
    }

    int codes() const { return 1 << n; }
    double& at(int code, int k) { return values[static_cast<std::size_t>(code) * channels + k]; }
    double at(int code, int k) const { return values[static_cast<std::size_t>(code) * channels + k]; }
};

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

// Double-well potential W(u) = u^2 (u-1)^2.
inline double double_well(double u) {
    const double t = u * (u - 1.0);
    return t * t;
}

// W'(u) = 2 u (2u - 1) (u - 1).
inline double double_well_deriv(double u) {
    return 2.0 * u * (2.0 * u - 1.0) * (u - 1.0);
}

// Smoothed Heaviside: ramps from 0 to 1 over [-eps1, eps1] with a sine blend,
// exactly 0/1 outside. Monotone, C^1, H(0) = 1/2.
inline double heaviside_reg(double u, double eps1) {
    if (!(eps1 > 0.0)) throw std::invalid_argument("heaviside_reg: eps1 must be positive");
    if (u > eps1) return 1.0;
    if (u < -eps1) return 0.0;
    const double v =
        (u + (eps1 / std::numbers::pi) * std::sin(std::numbers::pi * u / eps1)) / (2.0 * eps1) + 0.5;
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

// Matching smoothed delta: derivative of heaviside_reg, a raised cosine on
// [-eps1, eps1] with unit integral.
inline double dirac_reg(double u, double eps1) {
    if (!(eps1 > 0.0)) throw std::invalid_argument("dirac_reg: eps1 must be positive");
    if (u > eps1 || u < -eps1) return 0.0;
    const double v = (1.0 + std::cos(std::numbers::pi * u / eps1)) / (2.0 * eps1);
    return v < 0.0 ? 0.0 : v;
}

// Lower bound on the stabilizer that guarantees the exponential integrators
// preserve the [0, 1] bounds: 2/epsilon + 2*omega*lambda*pi/eps1^2.
inline double stabilizer_bound(double epsilon, double lambda, int omega, double eps1) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("stabilizer_bound: epsilon must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("stabilizer_bound: lambda must be positive");
    if (omega < 1) throw std::invalid_argument("stabilizer_bound: omega must be at least 1");
    if (!(eps1 > 0.0)) throw std::invalid_argument("stabilizer_bound: eps1 must be positive");
    return 2.0 / epsilon + 2.0 * omega * lambda * std::numbers::pi / (eps1 * eps1);
}

// ---------------------------------------------------------------------------
// Region indicators and fitting
// ---------------------------------------------------------------------------

// Product indicator of one region code given the n shifted Heaviside values
// hv[i] = heaviside_reg(u_i - 1/2, eps1).
inline double region_indicator_from_h(int code, const double* hv, int n) {
    double q = 1.0;
    for (int i = 0; i < n; ++i) q *= code_bit(code, i, n) ? hv[i] : 1.0 - hv[i];
    return q;
}

// Same, from raw field values at one pixel. The indicators over all 2^n codes
// form a partition of unity.
inline double region_indicator(int code, const double* u, int n, double eps1) {
    double hv[kMaxPhaseFields];
    for (int i = 0; i < n; ++i) hv[i] = heaviside_reg(u[i] - 0.5, eps1);
    return region_indicator_from_h(code, hv, n);
}

namespace detail {

inline void check_stack_image(const PhaseStack& u, const ImageTensor& img) {
    if (u.n() < 1) throw std::invalid_argument("phase stack is empty");
    if (u.rows() != img.rows() || u.cols() != img.cols())
        throw std::invalid_argument("phase stack and image shapes differ");
    for (const Field& f : u.fields)
        if (f.rows() != u.rows() || f.cols() != u.cols())
            throw std::invalid_argument("phase stack fields have mixed shapes");
}

inline void check_means(const PhaseStack& u, const ImageTensor& img, const RegionMeans& c) {
    if (c.n != u.n() || c.channels != img.channels())
        throw std::invalid_argument("region means do not match stack/image");
}

}  // namespace detail

// Pointwise fitting energy density: lambda * sum over codes and channels of
// (I - C_code)^2 * Q_code.
inline Field fitting_term(const PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                          double lambda, double eps1) {
    detail::check_stack_image(u, img);
    detail::check_means(u, img, c);
    const int n = u.n();
    const int codes = c.codes();
    const int omega = img.channels();
    Field out(u.rows(), u.cols());
    parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
        double hv[kMaxPhaseFields];
        for (std::size_t px = lo; px < hi; ++px) {
            for (int i = 0; i < n; ++i) hv[i] = heaviside_reg(u[i][px] - 0.5, eps1);
            const double* I = img.pixel(px);
            double acc = 0.0;
            for (int b = 0; b < codes; ++b) {
                const double q = region_indicator_from_h(b, hv, n);
                if (q == 0.0) continue;
                double misfit = 0.0;
                for (int k = 0; k < omega; ++k) {
                    const double d = I[k] - c.at(b, k);
                    misfit += d * d;
                }
                acc += misfit * q;
            }
            out[px] = lambda * acc;
        }
    });
    return out;
}

// Closed-form minimizer of the fitting energy in C: indicator-weighted means
// of the image over each coded region. Regions whose indicator mass falls
// below 1e-8 * (pixel count) keep their previous value (or the global channel
// mean when no previous means are supplied); `stale_count`, when given,
// receives the number of such codes.
inline RegionMeans update_means(const PhaseStack& u, const ImageTensor& img, double eps1,
                                const RegionMeans* previous = nullptr,
                                int* stale_count = nullptr) {
    detail::check_stack_image(u, img);
    if (previous && (previous->n != u.n() || previous->channels != img.channels()))
        throw std::invalid_argument("previous region means do not match stack/image");
    const int n = u.n();
    const int codes = region_count(n);
    const int omega = img.channels();
    const std::size_t pixels = img.pixels();
    const double mass_floor = 1e-8 * static_cast<double>(pixels);

    std::vector<double> den(codes, 0.0);
    std::vector<double> num(static_cast<std::size_t>(codes) * omega, 0.0);
    double hv[kMaxPhaseFields];
    for (std::size_t px = 0; px < pixels; ++px) {
        for (int i = 0; i < n; ++i) hv[i] = heaviside_reg(u[i][px] - 0.5, eps1);
        const double* I = img.pixel(px);
        for (int b = 0; b < codes; ++b) {
            const double q = region_indicator_from_h(b, hv, n);
            if (q == 0.0) continue;
            den[b] += q;
            for (int k = 0; k < omega; ++k) num[static_cast<std::size_t>(b) * omega + k] += q * I[k];
        }
    }

    RegionMeans c(n, omega);
    int stale = 0;
    std::vector<double> global_mean(omega, 0.0);
    for (std::size_t px = 0; px < pixels; ++px)
        for (int k = 0; k < omega; ++k) global_mean[k] += img.pixel(px)[k];
    for (int k = 0; k < omega; ++k) global_mean[k] /= static_cast<double>(pixels);

    for (int b = 0; b < codes; ++b) {
        if (den[b] < mass_floor) {
            ++stale;
            for (int k = 0; k < omega; ++k)
                c.at(b, k) = previous ? previous->at(b, k) : global_mean[k];
        } else {
            for (int k = 0; k < omega; ++k)
                c.at(b, k) = num[static_cast<std::size_t>(b) * omega + k] / den[b];
        }
    }
    if (stale_count) *stale_count = stale;
    return c;
}

// Variation of the fitting energy with respect to field i: pairs each region
// code having bit i set with its bit-i complement, weighting the misfit
// difference by the indicator product of the remaining fields and the
// smoothed delta of u_i. Zero wherever |u_i - 1/2| >= eps1.
inline Field force(int i, const PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                   double lambda, double eps1) {
    detail::check_stack_image(u, img);
    detail::check_means(u, img, c);
    const int n = u.n();
    if (i < 0 || i >= n) throw std::invalid_argument("force: field index out of range");
    const int codes = c.codes();
    const int omega = img.channels();
    Field out(u.rows(), u.cols());
    parallel_for(out.size(), [&](std::size_t lo, std::size_t hi) {
        double hv[kMaxPhaseFields];
        for (std::size_t px = lo; px < hi; ++px) {
            const double d = dirac_reg(u[i][px] - 0.5, eps1);
            if (d == 0.0) {
                out[px] = 0.0;
                continue;
            }
            for (int j = 0; j < n; ++j) hv[j] = heaviside_reg(u[j][px] - 0.5, eps1);
            const double* I = img.pixel(px);
            double acc = 0.0;
            for (int b = 0; b < codes; ++b) {
                if (!code_bit(b, i, n)) continue;
                const int bf = flip_code(b, i, n);
                double misfit = 0.0;
                for (int k = 0; k < omega; ++k) {
                    const double db = I[k] - c.at(b, k);
                    const double df = I[k] - c.at(bf, k);
                    misfit += db * db - df * df;
                }
                if (misfit == 0.0) continue;
                double prod = 1.0;
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    prod *= code_bit(b, j, n) ? hv[j] : 1.0 - hv[j];
                }
                acc += misfit * prod;
            }
            out[px] = lambda * d * acc;
        }
    });
    return out;
}

// Discrete energy: pointwise double-well and fitting contributions minus the
// quadratic Dirichlet term epsilon * sum_i u_i^T D_h u_i (D_h is negative
// semidefinite, so the last term adds a nonnegative amount).
inline double discrete_energy(const PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                              const ModelParams& params) {
    detail::check_stack_image(u, img);
    detail::check_means(u, img, c);
    const double eps1 = params.eps1();
    double e = 0.0;
    for (const Field& f : u.fields)
        for (double v : f) e += double_well(v) / params.epsilon;
    const Field fit = fitting_term(u, c, img, params.lambda, eps1);
    for (double v : fit) e += v;
    for (const Field& f : u.fields) e -= params.epsilon * dot(f, laplacian_apply(f, params.h));
    return e;
}

}  // namespace seg
