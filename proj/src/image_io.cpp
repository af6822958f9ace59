#include "codkit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace codkit {

namespace {

bool has_suffix(const std::string& s, const char* suf) {
    const std::size_t n = std::strlen(suf);
    return s.size() >= n && std::equal(s.end() - n, s.end(), suf, suf + n,
                                       [](char a, char b) { return std::tolower(a) == b; });
}

unsigned char quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decode any PNG into 8-bit rows, either gray (1 byte/px) or RGB (3 bytes/px).
std::vector<unsigned char> read_png(const std::string& path, int* w, int* h, bool rgb) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw UnreadableImage(path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnreadableImage(path + ": libpng setup failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnreadableImage(path + ": png decode error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (rgb) {
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
    } else {
        if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    *w = static_cast<int>(png_get_image_width(png, info));
    *h = static_cast<int>(png_get_image_height(png, info));
    const int bpp = rgb ? 3 : 1;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(*w) * *h * bpp);
    std::vector<png_bytep> rows(*h);
    for (int y = 0; y < *h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * *w * bpp;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void write_png(const std::string& path, const unsigned char* pixels, int w, int h, int channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw UnreadableImage("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw UnreadableImage(path + ": libpng setup failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw UnreadableImage(path + ": png encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * w * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Minimal PGM reader (P5 binary and P2 ascii, maxval <= 255).
std::vector<unsigned char> read_pgm(const std::string& path, int* w, int* h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableImage(path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw UnreadableImage(path + ": not a PGM");
    auto next_int = [&in, &path]() {
        int v;
        while (true) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string line;
                std::getline(in, line);
                continue;
            }
            if (!(in >> v)) throw UnreadableImage(path + ": truncated header");
            return v;
        }
    };
    *w = next_int();
    *h = next_int();
    const int maxval = next_int();
    if (*w <= 0 || *h <= 0 || maxval <= 0 || maxval > 255)
        throw UnreadableImage(path + ": unsupported PGM header");
    std::vector<unsigned char> pixels(static_cast<std::size_t>(*w) * *h);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
        if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
            throw UnreadableImage(path + ": truncated pixel data");
    } else {
        for (auto& px : pixels) {
            int v;
            if (!(in >> v)) throw UnreadableImage(path + ": truncated pixel data");
            px = static_cast<unsigned char>(v);
        }
    }
    if (maxval != 255)
        for (auto& px : pixels)
            px = static_cast<unsigned char>(std::lround(px * 255.0 / maxval));
    return pixels;
}

void write_pgm(const std::string& path, const unsigned char* pixels, int w, int h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableImage("cannot open for writing: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels), static_cast<std::streamsize>(w) * h);
}

}  // namespace

Tensor load_image_gray(const std::string& path) {
    int w = 0, h = 0;
    std::vector<unsigned char> px;
    if (has_suffix(path, ".pgm")) {
        px = read_pgm(path, &w, &h);
    } else {
        px = read_png(path, &w, &h, /*rgb=*/false);
    }
    Tensor out(1, h, w);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(px[i]) / 255.0f;
    return out;
}

Tensor load_image_rgb(const std::string& path) {
    int w = 0, h = 0;
    if (has_suffix(path, ".pgm")) {
        const Tensor g = load_image_gray(path);
        Tensor out(3, g.height(), g.width());
        for (int c = 0; c < 3; ++c)
            std::copy(g.data(), g.data() + g.size(), out.channel(c));
        return out;
    }
    std::vector<unsigned char> px = read_png(path, &w, &h, /*rgb=*/true);
    Tensor out(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) =
                    static_cast<float>(px[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
    return out;
}

void save_image_gray(const std::string& path, const Tensor& img) {
    if (img.channels() != 1) throw ShapeMismatch("save_image_gray: expected [1,H,W]");
    std::vector<unsigned char> px(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) px[i] = quantize(img[i]);
    if (has_suffix(path, ".pgm")) {
        write_pgm(path, px.data(), img.width(), img.height());
    } else {
        write_png(path, px.data(), img.width(), img.height(), 1);
    }
}

void save_image_rgb(const std::string& path, const Tensor& img) {
    if (img.channels() != 3) throw ShapeMismatch("save_image_rgb: expected [3,H,W]");
    std::vector<unsigned char> px(img.size());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c)
                px[(static_cast<std::size_t>(y) * img.width() + x) * 3 + c] = quantize(img.at(c, y, x));
    write_png(path, px.data(), img.width(), img.height(), 3);
}

}  // namespace codkit
