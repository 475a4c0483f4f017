#pragma once

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <png.h>

#include "sdeblur/image.hpp"
#include "sdeblur/kernel.hpp"

namespace sdeblur {

namespace detail {

inline uint8_t to_byte(double v) {
    int b = static_cast<int>(std::lround(v * 255.0));
    return static_cast<uint8_t>(std::clamp(b, 0, 255));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline PlanarImage load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error("cannot open file: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("PNG reader init failed: " + path);
    }
    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("failed to read PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    int w = static_cast<int>(png_get_image_width(png, info));
    int h = static_cast<int>(png_get_image_height(png, info));
    int ch = png_get_channels(png, info);
    if (ch == 4) {  // tRNS expansion can reintroduce alpha
        png_set_strip_alpha(png);
        png_read_update_info(png, info);
        ch = png_get_channels(png, info);
    }
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("unsupported PNG channel count in " + path);
    }
    rows.assign(h, std::vector<png_byte>(static_cast<size_t>(w) * ch));
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) ptrs[y] = rows[y].data();
    png_read_image(png, ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);

    PlanarImage img(w, h, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c)
                img.at(x, y, c) = rows[y][static_cast<size_t>(x) * ch + c] / 255.0;
    return img;
}

inline void save_png(const PlanarImage& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error("cannot open file for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG writer init failed: " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed to write PNG: " + path);
    }
    png_init_io(png, fp.get());
    int type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<size_t>(x) * img.channels + c] = to_byte(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline int pnm_next_int(std::istream& in, const std::string& path) {
    // skips whitespace and '#' comments
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw Error("malformed PNM header: " + path);
    return v;
}

inline PlanarImage load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    char p, kind;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw Error("unsupported PNM format: " + path);
    int w = pnm_next_int(in, path);
    int h = pnm_next_int(in, path);
    int maxv = pnm_next_int(in, path);
    if (maxv <= 0 || maxv > 255) throw Error("unsupported PNM max value: " + path);
    int ch = (kind == '3' || kind == '6') ? 3 : 1;
    PlanarImage img(w, h, ch);
    if (kind == '5' || kind == '6') {
        in.get();  // single whitespace after header
        std::vector<uint8_t> buf(static_cast<size_t>(w) * h * ch);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw Error("truncated PNM data: " + path);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < ch; ++c)
                    img.at(x, y, c) = buf[(static_cast<size_t>(y) * w + x) * ch + c] /
                                      static_cast<double>(maxv);
    } else {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < ch; ++c)
                    img.at(x, y, c) = pnm_next_int(in, path) / static_cast<double>(maxv);
    }
    return img;
}

inline void save_pnm(const PlanarImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> buf(static_cast<size_t>(img.width) * img.height * img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                buf[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
                    to_byte(img.at(x, y, c));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("failed to write PNM: " + path);
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() &&
           std::equal(suf.rbegin(), suf.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace detail

/// Loads an 8-bit PNG, PGM or PPM image into [0,1] reals.
inline PlanarImage load_image(const std::string& path) {
    if (detail::has_suffix(path, ".png")) return detail::load_png(path);
    if (detail::has_suffix(path, ".pgm") || detail::has_suffix(path, ".ppm") ||
        detail::has_suffix(path, ".pnm"))
        return detail::load_pnm(path);
    throw Error("unsupported image format: " + path);
}

inline void save_image(const PlanarImage& img, const std::string& path) {
    if (detail::has_suffix(path, ".png")) {
        detail::save_png(img, path);
        return;
    }
    if (detail::has_suffix(path, ".pgm") || detail::has_suffix(path, ".ppm") ||
        detail::has_suffix(path, ".pnm")) {
        detail::save_pnm(img, path);
        return;
    }
    throw Error("unsupported image format: " + path);
}

/// Masks travel as PGM files with values {0, 255}.
inline BinaryMask load_mask(const std::string& path) {
    PlanarImage img = load_image(path);
    if (img.channels != 1) img = rgb_to_gray(img);
    BinaryMask m(img.width, img.height);
    for (size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = img.data[i] >= 0.5 ? 1 : 0;
    return m;
}

inline void save_mask(const BinaryMask& mask, const std::string& path) {
    PlanarImage img(mask.width, mask.height, 1);
    for (size_t i = 0; i < mask.bits.size(); ++i) img.data[i] = mask.bits[i] ? 1.0 : 0.0;
    save_image(img, path);
}

/// Kernel text format: first line "ksize N", then N rows of N reals.
inline void save_kernel(const BlurKernel& k, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << "ksize " << k.size << "\n";
    out.precision(17);
    for (int y = 0; y < k.size; ++y) {
        for (int x = 0; x < k.size; ++x) out << (x ? " " : "") << k.at(x, y);
        out << "\n";
    }
    if (!out) throw Error("failed to write kernel: " + path);
}

inline BlurKernel load_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::string tag;
    int n = 0;
    if (!(in >> tag >> n) || tag != "ksize" || n < 1 || n % 2 == 0)
        throw Error("malformed kernel file: " + path);
    BlurKernel k(n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (!(in >> k.at(x, y))) throw Error("malformed kernel file: " + path);
    return k;
}

}  // namespace sdeblur
