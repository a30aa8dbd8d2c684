#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seg/grid.hpp"
#include "seg/image.hpp"

namespace seg {

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// PNM (PGM/PPM) reading: P2/P5 grayscale, P3/P6 color, any maxval up to 65535.
// ---------------------------------------------------------------------------

namespace detail {

inline int pnm_next_int(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments, then reads one nonnegative integer.
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch)) throw IoError(path + ": malformed PNM header");
    long v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + (ch - '0');
        if (v > 1 << 30) throw IoError(path + ": PNM header value out of range");
        ch = in.get();
    }
    if (ch != EOF) in.unget();
    return static_cast<int>(v);
}

inline ImageTensor load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    char p = 0, kind = 0;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw IoError(path + ": unsupported PNM type");
    const bool color = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    const int cols = pnm_next_int(in, path);
    const int rows = pnm_next_int(in, path);
    const int maxval = pnm_next_int(in, path);
    if (cols < 1 || rows < 1 || maxval < 1 || maxval > 65535)
        throw IoError(path + ": bad PNM dimensions or maxval");
    const int channels = color ? 3 : 1;
    ImageTensor img(rows, cols, channels);
    const std::size_t samples = static_cast<std::size_t>(rows) * cols * channels;
    if (binary) {
        in.get();  // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(samples * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw IoError(path + ": truncated PNM raster");
        for (std::size_t i = 0; i < samples; ++i) {
            const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
            img.data()[i] = static_cast<double>(v) / maxval;
        }
    } else {
        for (std::size_t i = 0; i < samples; ++i) {
            const int v = pnm_next_int(in, path);
            if (v > maxval) throw IoError(path + ": PNM sample exceeds maxval");
            img.data()[i] = static_cast<double>(v) / maxval;
        }
    }
    return img;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PNG reading and writing (8-bit grayscale or RGB) via libpng.
// ---------------------------------------------------------------------------

namespace detail {

// Holds everything a PNG decode touches. All nontrivially destructible
// objects live here, constructed before the setjmp landing pad, so the
// exception thrown from the longjmp branch unwinds them safely.
struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    std::vector<unsigned char> raster;
    std::vector<png_bytep> row_ptrs;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    std::vector<png_bytep> row_ptrs;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

inline ImageTensor load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError(path + ": cannot open");
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError(path + ": png read init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError(path + ": png info init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError(path + ": png decode failed");

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);

    // Normalize every layout to 8-bit gray or RGB without alpha.
    const png_byte color_type = png_get_color_type(ctx.png, ctx.info);
    const png_byte bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_strip_16(ctx.png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int rows = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const int cols = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int channels = png_get_channels(ctx.png, ctx.info);
    if (rows < 1 || cols < 1 || (channels != 1 && channels != 3))
        throw IoError(path + ": unsupported PNG layout");

    ctx.raster.resize(static_cast<std::size_t>(rows) * cols * channels);
    ctx.row_ptrs.resize(rows);
    for (int r = 0; r < rows; ++r)
        ctx.row_ptrs[r] = ctx.raster.data() + static_cast<std::size_t>(r) * cols * channels;
    png_read_image(ctx.png, ctx.row_ptrs.data());
    png_read_end(ctx.png, nullptr);

    ImageTensor img(rows, cols, channels);
    for (std::size_t i = 0; i < ctx.raster.size(); ++i) img.data()[i] = ctx.raster[i] / 255.0;
    return img;
}

inline void write_png_bytes(const std::string& path, const std::vector<unsigned char>& raster,
                            int rows, int cols, int channels) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw IoError(path + ": cannot open for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError(path + ": png write init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError(path + ": png info init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError(path + ": png encode failed");

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows),
                 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    ctx.row_ptrs.resize(rows);
    for (int r = 0; r < rows; ++r)
        ctx.row_ptrs[r] =
            const_cast<png_bytep>(raster.data() + static_cast<std::size_t>(r) * cols * channels);
    png_write_image(ctx.png, ctx.row_ptrs.data());
    png_write_end(ctx.png, nullptr);
}

}  // namespace detail

inline unsigned char quantize_byte(double v) {
    const double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<unsigned char>(q);
}

// Writes a [0, 1] field as an 8-bit grayscale PNG.
inline void save_png_gray(const std::string& path, const Field& f) {
    std::vector<unsigned char> raster(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) raster[i] = quantize_byte(f[i]);
    detail::write_png_bytes(path, raster, f.rows(), f.cols(), 1);
}

// Writes interleaved 8-bit RGB bytes (size rows*cols*3).
inline void save_png_rgb(const std::string& path, const std::vector<unsigned char>& rgb, int rows,
                         int cols) {
    if (rgb.size() != static_cast<std::size_t>(rows) * cols * 3)
        throw std::invalid_argument("save_png_rgb: buffer size mismatch");
    detail::write_png_bytes(path, rgb, rows, cols, 3);
}

// Bilinear resample to the target shape (pixel-center aligned).
inline ImageTensor resize_bilinear(const ImageTensor& img, int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("resize_bilinear: bad target shape");
    if (rows == img.rows() && cols == img.cols()) return img;
    ImageTensor out(rows, cols, img.channels());
    const double row_scale = static_cast<double>(img.rows()) / rows;
    const double col_scale = static_cast<double>(img.cols()) / cols;
    for (int r = 0; r < rows; ++r) {
        const double sr = std::clamp((r + 0.5) * row_scale - 0.5, 0.0,
                                     static_cast<double>(img.rows() - 1));
        const int r0 = static_cast<int>(sr);
        const int r1 = std::min(r0 + 1, img.rows() - 1);
        const double fr = sr - r0;
        for (int c = 0; c < cols; ++c) {
            const double sc = std::clamp((c + 0.5) * col_scale - 0.5, 0.0,
                                         static_cast<double>(img.cols() - 1));
            const int c0 = static_cast<int>(sc);
            const int c1 = std::min(c0 + 1, img.cols() - 1);
            const double fc = sc - c0;
            for (int k = 0; k < img.channels(); ++k) {
                const double top = img.at(r0, c0, k) * (1.0 - fc) + img.at(r0, c1, k) * fc;
                const double bot = img.at(r1, c0, k) * (1.0 - fc) + img.at(r1, c1, k) * fc;
                out.at(r, c, k) = top * (1.0 - fr) + bot * fr;
            }
        }
    }
    return out;
}

// Loads a PNG, PGM or PPM image (detected from the file signature), with an
// optional bilinear rescale to (rows, cols). Values land in [0, 1];
// grayscale gives 1 channel, color 3.
inline ImageTensor load_image(const std::string& path,
                              std::optional<std::pair<int, int>> rescale = std::nullopt) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError(path + ": cannot open");
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    if (probe.gcount() != 2) throw IoError(path + ": file too short");
    probe.close();

    ImageTensor img;
    if (sig[0] == 0x89 && sig[1] == 'P')
        img = detail::load_png(path);
    else if (sig[0] == 'P' && (sig[1] == '2' || sig[1] == '3' || sig[1] == '5' || sig[1] == '6'))
        img = detail::load_pnm(path);
    else
        throw IoError(path + ": unrecognized image format (PNG/PGM/PPM supported)");

    if (rescale) img = resize_bilinear(img, rescale->first, rescale->second);
    img.validate();
    return img;
}

}  // namespace seg
