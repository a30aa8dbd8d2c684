#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "seg/grid.hpp"
#include "seg/spectral.hpp"

namespace seg {

// Small dense linear algebra used to cross-check the spectral path on tiny
// grids. Matrices are row-major n x n in std::vector<double>. Everything here
// is O(n^3) or worse; keep n small (grids up to ~16x16).

using DenseMatrix = std::vector<double>;

// Tridiagonal 1D Neumann Laplacian factor: stencil (1, -2, 1) with first and
// last diagonal entry -1. For m == 1 the matrix is the 1x1 zero.
inline DenseMatrix neumann_1d_matrix(int m) {
    if (m < 1) throw std::invalid_argument("neumann_1d_matrix: size must be positive");
    DenseMatrix a(static_cast<std::size_t>(m) * m, 0.0);
    if (m == 1) return a;
    for (int i = 0; i < m; ++i) {
        a[static_cast<std::size_t>(i) * m + i] = (i == 0 || i == m - 1) ? -1.0 : -2.0;
        if (i > 0) a[static_cast<std::size_t>(i) * m + i - 1] = 1.0;
        if (i + 1 < m) a[static_cast<std::size_t>(i) * m + i + 1] = 1.0;
    }
    return a;
}

inline DenseMatrix kron(const DenseMatrix& a, int na, const DenseMatrix& b, int nb) {
    const int n = na * nb;
    DenseMatrix out(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) {
            const double aij = a[static_cast<std::size_t>(i) * na + j];
            if (aij == 0.0) continue;
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l)
                    out[(static_cast<std::size_t>(i) * nb + k) * n + j * nb + l] =
                        aij * b[static_cast<std::size_t>(k) * nb + l];
        }
    return out;
}

// (1/h^2) (I_rows ⊗ Λ_cols + Λ_rows ⊗ I_cols) on the row-major flattening —
// the explicit matrix of laplacian_apply.
inline DenseMatrix dense_neumann_laplacian(int rows, int cols, double h) {
    const int n = rows * cols;
    DenseMatrix id_r(static_cast<std::size_t>(rows) * rows, 0.0);
    DenseMatrix id_c(static_cast<std::size_t>(cols) * cols, 0.0);
    for (int i = 0; i < rows; ++i) id_r[static_cast<std::size_t>(i) * rows + i] = 1.0;
    for (int i = 0; i < cols; ++i) id_c[static_cast<std::size_t>(i) * cols + i] = 1.0;
    const DenseMatrix lam_r = neumann_1d_matrix(rows);
    const DenseMatrix lam_c = neumann_1d_matrix(cols);
    DenseMatrix a = kron(id_r, rows, lam_c, cols);
    const DenseMatrix b = kron(lam_r, rows, id_c, cols);
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 0; i < n * n; ++i) a[i] = (a[i] + b[i]) * inv_h2;
    return a;
}

// Cyclic Jacobi eigensolver for symmetric matrices. Returns eigenvalues in
// `values` and orthonormal eigenvectors in the columns of `vectors`.
struct DenseEigen {
    std::vector<double> values;
    DenseMatrix vectors;  // column j is the eigenvector of values[j]
};

inline DenseEigen jacobi_eigensym(DenseMatrix a, int n) {
    DenseMatrix v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto at = [&](DenseMatrix& m, int i, int j) -> double& {
        return m[static_cast<std::size_t>(i) * n + j];
    };
    double norm = 0.0;
    for (int i = 0; i < n * n; ++i) norm = std::max(norm, std::abs(a[i]));
    const double stop = std::max(norm, 1.0) * 1e-15;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(at(a, i, j)));
        if (off <= stop) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(a, p, q);
                if (std::abs(apq) <= stop * 1e-2) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
                const double sin_r = t * cos_r;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(a, k, p), akq = at(a, k, q);
                    at(a, k, p) = cos_r * akp - sin_r * akq;
                    at(a, k, q) = sin_r * akp + cos_r * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(a, p, k), aqk = at(a, q, k);
                    at(a, p, k) = cos_r * apk - sin_r * aqk;
                    at(a, q, k) = sin_r * apk + cos_r * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(v, k, p), vkq = at(v, k, q);
                    at(v, k, p) = cos_r * vkp - sin_r * vkq;
                    at(v, k, q) = sin_r * vkp + cos_r * vkq;
                }
            }
        }
    }
    DenseEigen out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = a[static_cast<std::size_t>(i) * n + i];
    out.vectors = std::move(v);
    return out;
}

// phi_j(dt * L_h) v computed densely: assemble L_h = -2*epsilon*D_h + S,
// eigendecompose, apply phi_j to the eigenvalues. Independent of the DCT
// path except for the scalar phi evaluation.
class DensePhiOracle {
  public:
    DensePhiOracle(int rows, int cols, double h, double stabilizer, double epsilon, double dt)
        : rows_(rows), cols_(cols), dt_(dt) {
        const int n = rows * cols;
        DenseMatrix lh = dense_neumann_laplacian(rows, cols, h);
        for (int i = 0; i < n * n; ++i) lh[i] *= -2.0 * epsilon;
        for (int i = 0; i < n; ++i) lh[static_cast<std::size_t>(i) * n + i] += stabilizer;
        eig_ = jacobi_eigensym(std::move(lh), n);
    }

    Field apply(int j, const Field& f) const {
        const int n = rows_ * cols_;
        if (f.rows() != rows_ || f.cols() != cols_)
            throw std::invalid_argument("DensePhiOracle: shape mismatch");
        // w = V phi_j(dt * diag) V^T f
        std::vector<double> proj(n, 0.0);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += eig_.vectors[static_cast<std::size_t>(i) * n + k] * f[i];
            proj[k] = s * phi_scalar(j, dt_ * eig_.values[k]);
        }
        Field out(rows_, cols_);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += eig_.vectors[static_cast<std::size_t>(i) * n + k] * proj[k];
            out[i] = s;
        }
        return out;
    }

  private:
    int rows_, cols_;
    double dt_;
    DenseEigen eig_;
};

}  // namespace seg
