#include "relmap/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <png.h>

namespace relmap {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

Image8 read_ppm(std::ifstream& f, const std::filesystem::path& path) {
    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = f.get()) != EOF) {
            if (ch == '#') {  // comment to end of line
                while ((ch = f.get()) != EOF && ch != '\n') {
                }
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        return tok;
    };

    if (next_token() != "P6") fail(path, "not a P6 PPM");
    Image8 img;
    try {
        img.width = std::stoul(next_token());
        img.height = std::stoul(next_token());
        const unsigned maxval = static_cast<unsigned>(std::stoul(next_token()));
        if (maxval != 255) fail(path, "unsupported PPM maxval (want 255)");
    } catch (const std::logic_error&) {
        fail(path, "malformed PPM header");
    }
    if (img.width == 0 || img.height == 0) fail(path, "empty PPM");
    img.pixels.resize(img.width * img.height * 3);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(f.gcount()) != img.pixels.size()) {
        fail(path, "truncated PPM pixel data");
    }
    return img;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Image8 read_png_file(const std::filesystem::path& path) {
    PngReadCloser s;
    s.fp = std::fopen(path.string().c_str(), "rb");
    if (!s.fp) fail(path, "cannot open");
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!s.png) fail(path, "png_create_read_struct failed");
    s.info = png_create_info_struct(s.png);
    if (!s.info) fail(path, "png_create_info_struct failed");
    if (setjmp(png_jmpbuf(s.png))) fail(path, "PNG decode error");

    png_init_io(s.png, s.fp);
    png_read_info(s.png, s.info);

    // Normalize anything libpng can hand us to 8-bit RGB.
    png_set_expand(s.png);
    png_set_strip_16(s.png);
    png_set_strip_alpha(s.png);
    png_set_gray_to_rgb(s.png);
    png_set_palette_to_rgb(s.png);
    png_read_update_info(s.png, s.info);

    Image8 img;
    img.width = png_get_image_width(s.png, s.info);
    img.height = png_get_image_height(s.png, s.info);
    if (png_get_channels(s.png, s.info) != 3) fail(path, "PNG did not normalize to RGB");
    img.pixels.resize(img.width * img.height * 3);

    std::vector<png_bytep> rows(img.height);
    for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.width * 3;
    png_read_image(s.png, rows.data());
    png_read_end(s.png, nullptr);
    return img;
}

}  // namespace

Image8 read_image(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    char magic[2] = {0, 0};
    f.read(magic, 2);
    f.seekg(0);
    if (magic[0] == 'P' && magic[1] == '6') return read_ppm(f, path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
        f.close();
        return read_png_file(path);
    }
    fail(path, "unrecognized image format (want PPM P6 or PNG)");
}

void write_ppm(const Image8& img, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot write");
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) fail(path, "short write");
}

void write_png(const Image8& img, const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) fail(path, "cannot write");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        fail(path, "PNG encode error");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * img.width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_image(const Image8& img, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ppm") {
        write_ppm(img, path);
    } else if (ext == ".png") {
        write_png(img, path);
    } else {
        fail(path, "unsupported image extension (want .ppm or .png)");
    }
}

Tensor image_to_hwc(const Image8& img) {
    Tensor t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        t[i] = static_cast<double>(img.pixels[i]) / 255.0;
    }
    return t;
}

Image8 hwc_to_image(const Tensor& t) {
    if (t.rank() != 3 || t.extent(2) != 3) {
        throw std::invalid_argument("hwc_to_image: want an H x W x 3 tensor, got " +
                                    shape_to_string(t.shape()));
    }
    Image8 img;
    img.height = t.extent(0);
    img.width = t.extent(1);
    img.pixels.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = std::clamp(t[i], 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

Tensor hwc_to_chw(const Tensor& t) {
    if (t.rank() != 3) throw std::invalid_argument("hwc_to_chw: want a rank-3 tensor");
    const std::size_t h = t.extent(0), w = t.extent(1), c = t.extent(2);
    Tensor out({c, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                out.at3(ch, y, x) = t.at3(y, x, ch);
            }
        }
    }
    return out;
}

Tensor chw_to_hwc(const Tensor& t) {
    if (t.rank() != 3) throw std::invalid_argument("chw_to_hwc: want a rank-3 tensor");
    const std::size_t c = t.extent(0), h = t.extent(1), w = t.extent(2);
    Tensor out({h, w, c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                out.at3(y, x, ch) = t.at3(ch, y, x);
            }
        }
    }
    return out;
}

}  // namespace relmap
