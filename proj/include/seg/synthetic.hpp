#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "seg/driver.hpp"
#include "seg/image.hpp"

namespace seg {

struct LabeledImage {
    ImageTensor image;
    LabelMap truth;
};

// Four equal blocks with intensities 0, 1/3, 2/3, 1 (row-major block order)
// and the block index as ground truth.
inline LabeledImage blocks_image(int rows, int cols) {
    LabeledImage out{ImageTensor(rows, cols, 1), LabelMap(rows, cols, 0)};
    const std::array<double, 4> values = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int block = (r >= rows / 2 ? 2 : 0) + (c >= cols / 2 ? 1 : 0);
            out.image.at(r, c, 0) = values[block];
            out.truth(r, c) = static_cast<std::uint16_t>(block);
        }
    return out;
}

// Four-region grayscale scene: a disk, a ring and a rounded bar on a dark
// background, with well-separated intensities.
inline LabeledImage shapes_image(int rows, int cols) {
    LabeledImage out{ImageTensor(rows, cols, 1), LabelMap(rows, cols, 0)};
    const double sr = rows / 128.0, sc = cols / 128.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double y = r / sr, x = c / sc;  // 128x128 reference coordinates
            double v = 0.0;
            int label = 0;
            const double disk = std::hypot(x - 36.0, y - 38.0);
            const double ring = std::hypot(x - 90.0, y - 40.0);
            if (disk <= 20.0) {
                v = 0.35;
                label = 1;
            } else if (ring >= 12.0 && ring <= 22.0) {
                v = 0.70;
                label = 2;
            } else if (y >= 84.0 && y <= 108.0 && x >= 24.0 && x <= 104.0) {
                v = 1.0;
                label = 3;
            }
            out.image.at(r, c, 0) = v;
            out.truth(r, c) = static_cast<std::uint16_t>(label);
        }
    }
    return out;
}

// Additive Gaussian noise with the given variance, clipped back to [0, 1].
inline ImageTensor add_gaussian_noise(const ImageTensor& img, double variance,
                                      std::uint64_t seed) {
    ImageTensor out = img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    for (double& v : out.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    return out;
}

// Smooth horizontal intensity ramp, handy for I/O tests.
inline ImageTensor ramp_image(int rows, int cols, int channels = 1) {
    ImageTensor img(rows, cols, channels);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (int k = 0; k < channels; ++k)
                img.at(r, c, k) = cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.0;
    return img;
}

}  // namespace seg
