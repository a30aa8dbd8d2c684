#pragma once

#include <stdexcept>

#include "seg/grid.hpp"

namespace seg {

// Five-point Laplacian with homogeneous Neumann boundary, i.e. the matrix
// (1/h^2) (I ⊗ Λ_cols + Λ_rows ⊗ I) acting on the row-major flattening,
// where Λ_M is tridiagonal with stencil (1, -2, 1) and first/last diagonal
// entry -1. Equivalent to replicate padding: out-of-range neighbors take the
// center value. Negative semidefinite; rows sum to zero.
inline Field laplacian_apply(const Field& v, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("laplacian_apply: h must be positive");
    const int R = v.rows(), C = v.cols();
    Field out(R, C);
    const double inv_h2 = 1.0 / (h * h);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const double center = v(r, c);
            const double up = r > 0 ? v(r - 1, c) : center;
            const double down = r + 1 < R ? v(r + 1, c) : center;
            const double left = c > 0 ? v(r, c - 1) : center;
            const double right = c + 1 < C ? v(r, c + 1) : center;
            out(r, c) = (up + down + left + right - 4.0 * center) * inv_h2;
        }
    }
    return out;
}

}  // namespace seg
