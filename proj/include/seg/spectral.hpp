#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "seg/grid.hpp"
#include "seg/laplacian.hpp"

namespace seg {

// ---------------------------------------------------------------------------
// Orthonormal 2D cosine transform (DCT-II forward, DCT-III inverse)
//
// The basis vectors are the eigenvectors of the Neumann Laplacian, so the
// transform diagonalizes laplacian_apply: mode (kr, kc) has eigenvalue
// -(4/h^2) (sin^2(kr*pi/(2*rows)) + sin^2(kc*pi/(2*cols))).
// Forward followed by inverse is the identity; a constant field c maps to a
// single coefficient c * sqrt(rows * cols) at (0, 0).
// ---------------------------------------------------------------------------

class Dct2 {
  public:
    Dct2(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows < 1 || cols < 1) throw std::invalid_argument("Dct2: dimensions must be positive");
        const std::size_t sz = static_cast<std::size_t>(rows) * cols;
        std::vector<double> a(sz, 0.0), b(sz, 0.0);
        // Planned with FFTW_UNALIGNED so the plans may execute on any
        // caller-supplied arrays (new-array execution), keeping const methods
        // reentrant.
        fwd_ = fftw_plan_r2r_2d(rows, cols, a.data(), b.data(), FFTW_REDFT10, FFTW_REDFT10,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_r2r_2d(rows, cols, a.data(), b.data(), FFTW_REDFT01, FFTW_REDFT01,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("Dct2: FFTW plan creation failed");
        // Orthonormal scale factors per 1D index: sqrt(1/M) for k = 0,
        // sqrt(2/M) otherwise, relative to FFTW's unnormalized kernels.
        row_scale_ = make_scales(rows);
        col_scale_ = make_scales(cols);
    }

    ~Dct2() {
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

    Dct2(const Dct2&) = delete;
    Dct2& operator=(const Dct2&) = delete;

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    void forward(const Field& in, Field& out) const {
        check(in, out);
        fftw_execute_r2r(fwd_, const_cast<double*>(in.data()), out.data());
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) out(r, c) *= 0.25 * row_scale_[r] * col_scale_[c];
    }

    void inverse(const Field& in, Field& out) const {
        check(in, out);
        Field tmp(rows_, cols_);
        for (int r = 0; r < rows_; ++r) {
            const double rs = r == 0 ? row_scale_[0] : 0.5 * row_scale_[r];
            for (int c = 0; c < cols_; ++c) {
                const double cs = c == 0 ? col_scale_[0] : 0.5 * col_scale_[c];
                tmp(r, c) = in(r, c) * rs * cs;
            }
        }
        fftw_execute_r2r(bwd_, tmp.data(), out.data());
    }

  private:
    static std::vector<double> make_scales(int m) {
        std::vector<double> s(m);
        s[0] = std::sqrt(1.0 / m);
        for (int k = 1; k < m; ++k) s[k] = std::sqrt(2.0 / m);
        return s;
    }

    void check(const Field& in, const Field& out) const {
        if (in.rows() != rows_ || in.cols() != cols_ || out.rows() != rows_ || out.cols() != cols_)
            throw std::invalid_argument("Dct2: field shape does not match plan");
        if (in.data() == out.data())
            throw std::invalid_argument("Dct2: in-place transform not supported");
    }

    int rows_, cols_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
    std::vector<double> row_scale_, col_scale_;
};

inline Field dct2_forward(const Field& v) {
    Dct2 plan(v.rows(), v.cols());
    Field out(v.rows(), v.cols());
    plan.forward(v, out);
    return out;
}

inline Field dct2_inverse(const Field& v) {
    Dct2 plan(v.rows(), v.cols());
    Field out(v.rows(), v.cols());
    plan.inverse(v, out);
    return out;
}

// ---------------------------------------------------------------------------
// phi functions of the exponential integrators
//
//   phi0(a) = exp(-a)
//   phi1(a) = (1 - exp(-a)) / a
//   phi2(a) = (exp(-a) - 1 + a) / a^2
//
// For a < 1e-4 the divided forms lose digits, so a five-term alternating
// series is used instead. Identities: a*phi1 = 1 - phi0, a*phi2 = 1 - phi1.
// All three map a >= 0 into (0, 1].
// ---------------------------------------------------------------------------

inline double phi_scalar(int j, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("phi_scalar: a must be nonnegative");
    switch (j) {
        case 0:
            return std::exp(-a);
        case 1:
            if (a < 1e-4)
                return 1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0 + a * a * a * a / 120.0;
            return (1.0 - std::exp(-a)) / a;
        case 2:
            if (a < 1e-4)
                return 0.5 - a / 6.0 + a * a / 24.0 - a * a * a / 120.0 + a * a * a * a / 720.0;
            return (std::exp(-a) - 1.0 + a) / (a * a);
        default:
            throw std::invalid_argument("phi_scalar: j must be 0, 1 or 2");
    }
}

// ---------------------------------------------------------------------------
// SpectralPlan: cached diagonalization of dt * L_h, L_h = -2*epsilon*D_h + S.
//
// Stores the DCT plans plus the phi_j multiplier grids over the cosine modes,
// so applying phi_j(dt * L_h) costs one forward transform, one pointwise
// multiply and one inverse transform. Immutable after construction and safe
// to share between threads.
// ---------------------------------------------------------------------------

class SpectralPlan {
  public:
    SpectralPlan(int rows, int cols, double h, double stabilizer, double epsilon, double dt)
        : dct_(rows, cols),
          h_(h),
          stabilizer_(stabilizer),
          epsilon_(epsilon),
          dt_(dt),
          phi_{Field(rows, cols), Field(rows, cols), Field(rows, cols)} {
        if (!(h > 0.0) || !(stabilizer > 0.0) || !(epsilon > 0.0) || !(dt > 0.0))
            throw std::invalid_argument("SpectralPlan: parameters must be positive");
        const double inv_h2 = 1.0 / (h * h);
        for (int r = 0; r < rows; ++r) {
            const double sr = std::sin(r * std::numbers::pi / (2.0 * rows));
            for (int c = 0; c < cols; ++c) {
                const double sc = std::sin(c * std::numbers::pi / (2.0 * cols));
                // Eigenvalue of -D_h at mode (r, c), always >= 0.
                const double mu = 4.0 * inv_h2 * (sr * sr + sc * sc);
                const double a = dt * (2.0 * epsilon * mu + stabilizer);
                for (int j = 0; j < 3; ++j) phi_[j](r, c) = phi_scalar(j, a);
            }
        }
    }

    int rows() const { return dct_.rows(); }
    int cols() const { return dct_.cols(); }
    double h() const { return h_; }
    double stabilizer() const { return stabilizer_; }
    double epsilon() const { return epsilon_; }
    double dt() const { return dt_; }

    const Dct2& dct() const { return dct_; }
    const Field& multiplier(int j) const { return phi_[check_j(j)]; }

    // phi_j(dt * L_h) v.
    Field apply_phi(int j, const Field& v) const {
        check_j(j);
        Field w(rows(), cols()), out(rows(), cols());
        dct_.forward(v, w);
        const Field& m = phi_[j];
        for (std::size_t i = 0; i < w.size(); ++i) w[i] *= m[i];
        dct_.inverse(w, out);
        return out;
    }

    // phi0(dt L_h) u + dt * phi1(dt L_h) g, the exponential Euler update.
    Field exp_euler(const Field& u, const Field& g) const {
        Field wu(rows(), cols()), wg(rows(), cols()), out(rows(), cols());
        dct_.forward(u, wu);
        dct_.forward(g, wg);
        for (std::size_t i = 0; i < wu.size(); ++i)
            wu[i] = phi_[0][i] * wu[i] + dt_ * phi_[1][i] * wg[i];
        dct_.inverse(wu, out);
        return out;
    }

    // u + dt * phi2(dt L_h) g, the second-order correction.
    Field add_phi2(const Field& u, const Field& g) const {
        Field wg(rows(), cols()), out(rows(), cols());
        dct_.forward(g, wg);
        for (std::size_t i = 0; i < wg.size(); ++i) wg[i] *= dt_ * phi_[2][i];
        dct_.inverse(wg, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += u[i];
        return out;
    }

  private:
    static int check_j(int j) {
        if (j < 0 || j > 2) throw std::invalid_argument("SpectralPlan: j must be 0, 1 or 2");
        return j;
    }

    Dct2 dct_;
    double h_, stabilizer_, epsilon_, dt_;
    Field phi_[3];
};

}  // namespace seg
