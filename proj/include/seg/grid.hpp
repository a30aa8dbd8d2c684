#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace seg {

// Dense 2D array in row-major order. `rows` is the image height, `cols` the
// width; element (r, c) lives at data()[r * cols + c].
template <typename T>
class Grid2D {
  public:
    Grid2D() : rows_(0), cols_(0) {}

    Grid2D(int rows, int cols, T value = T{}) : rows_(rows), cols_(cols) {
        if (rows <= 0 || cols <= 0)
            throw std::invalid_argument("Grid2D: dimensions must be positive");
        data_.assign(static_cast<std::size_t>(rows) * cols, value);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool same_shape(const Grid2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

  private:
    int rows_;
    int cols_;
    std::vector<T> data_;
};

using Field = Grid2D<double>;
using Mask = Grid2D<std::uint8_t>;

inline double field_min(const Field& f) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : f) m = std::min(m, v);
    return m;
}

inline double field_max(const Field& f) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : f) m = std::max(m, v);
    return m;
}

inline bool field_finite(const Field& f) {
    for (double v : f)
        if (!std::isfinite(v)) return false;
    return true;
}

// max |a - b| over all cells; shapes must match.
inline double inf_norm_diff(const Field& a, const Field& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("inf_norm_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double dot(const Field& a, const Field& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::size_t mask_count(const Mask& m) {
    std::size_t n = 0;
    for (auto v : m) n += (v != 0);
    return n;
}

}  // namespace seg
