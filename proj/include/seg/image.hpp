#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "seg/grid.hpp"

namespace seg {

// Image with `channels` interleaved samples per pixel, values in [0, 1].
// Row-major: sample (r, c, k) lives at data()[(r * cols + c) * channels + k].
class ImageTensor {
  public:
    ImageTensor() : rows_(0), cols_(0), channels_(0) {}

    ImageTensor(int rows, int cols, int channels, double value = 0.0)
        : rows_(rows), cols_(cols), channels_(channels) {
        if (rows <= 0 || cols <= 0)
            throw std::invalid_argument("ImageTensor: dimensions must be positive");
        if (channels <= 0)
            throw std::invalid_argument("ImageTensor: channel count must be positive");
        data_.assign(static_cast<std::size_t>(rows) * cols * channels, value);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int channels() const { return channels_; }
    std::size_t pixels() const { return static_cast<std::size_t>(rows_) * cols_; }

    double& at(int r, int c, int k) {
        return data_[(static_cast<std::size_t>(r) * cols_ + c) * channels_ + k];
    }
    double at(int r, int c, int k) const {
        return data_[(static_cast<std::size_t>(r) * cols_ + c) * channels_ + k];
    }

    const double* pixel(std::size_t flat) const { return data_.data() + flat * channels_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    // Throws unless every sample is finite and inside [0, 1].
    void validate() const {
        for (double v : data_) {
            if (!std::isfinite(v))
                throw std::runtime_error("ImageTensor: non-finite sample");
            if (v < 0.0 || v > 1.0)
                throw std::runtime_error("ImageTensor: sample outside [0, 1]");
        }
    }

    Field channel(int k) const {
        Field f(rows_, cols_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) f(r, c) = at(r, c, k);
        return f;
    }

  private:
    int rows_;
    int cols_;
    int channels_;
    std::vector<double> data_;
};

}  // namespace seg
