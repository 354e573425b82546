#include "fumo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fumo {

namespace {

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    int depth = 0;
    std::vector<std::uint8_t> pixels;
};

struct MemoryReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

struct PngErrorSink {
    char message[256];
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->pos + length > reader->size) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, reader->data + reader->pos, length);
    reader->pos += length;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t length) {
    auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    sink->insert(sink->end(), data, data + length);
}

void flush_noop(png_structp) {}

// libpng reports errors via longjmp; keep this frame free of objects whose
// destructors would be skipped. Returns false and fills sink on failure.
bool decode_into(MemoryReader* reader, DecodedPng* out, std::vector<png_bytep>* rows, PngErrorSink* sink) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, on_png_error, on_png_warning);
    if (png == nullptr) {
        std::snprintf(sink->message, sizeof(sink->message), "png_create_read_struct failed");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        std::snprintf(sink->message, sizeof(sink->message), "png_create_info_struct failed");
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, reader, read_from_memory);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    out->width = static_cast<int>(png_get_image_width(png, info));
    out->height = static_cast<int>(png_get_image_height(png, info));
    out->channels = png_get_channels(png, info);
    out->depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    out->pixels.resize(row_bytes * static_cast<std::size_t>(out->height));
    rows->resize(static_cast<std::size_t>(out->height));
    for (int y = 0; y < out->height; ++y) {
        (*rows)[y] = out->pixels.data() + row_bytes * static_cast<std::size_t>(y);
    }
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool encode_into(const std::vector<png_bytep>* rows, int width, int height, int channels, int depth,
                 std::vector<std::uint8_t>* sink_bytes, PngErrorSink* sink) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, on_png_error, on_png_warning);
    if (png == nullptr) {
        std::snprintf(sink->message, sizeof(sink->message), "png_create_write_struct failed");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        std::snprintf(sink->message, sizeof(sink->message), "png_create_info_struct failed");
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, sink_bytes, write_to_memory, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows->data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

std::uint32_t load_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::string lowercase_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io_read, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::io_read, "failed reading " + path.string());
    }
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::io_write, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::io_write, "failed writing " + path.string());
    }
}

ImageF decode_png(const std::vector<std::uint8_t>& bytes) {
    MemoryReader reader{bytes.data(), bytes.size(), 0};
    DecodedPng decoded;
    std::vector<png_bytep> rows;
    PngErrorSink sink{};
    if (!decode_into(&reader, &decoded, &rows, &sink)) {
        fail(ErrorCode::io_read, std::string("invalid PNG: ") + sink.message);
    }
    const int channels = decoded.channels == 3 ? 3 : 1;
    if (decoded.channels != 1 && decoded.channels != 3) {
        fail(ErrorCode::io_read, "unsupported PNG channel layout");
    }
    ImageF img(decoded.height, decoded.width, channels);
    auto dst = img.data();
    if (decoded.depth == 16) {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const unsigned code = (static_cast<unsigned>(decoded.pixels[2 * i]) << 8) | decoded.pixels[2 * i + 1];
            dst[i] = code / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = decoded.pixels[i] / 255.0;
        }
    }
    return img;
}

ImageF read_png(const std::filesystem::path& path) {
    try {
        return decode_png(read_file(path));
    } catch (const Error& e) {
        fail(ErrorCode::io_read, path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageF& img, BitDepth depth) {
    const int bytes_per_sample = depth == BitDepth::u16 ? 2 : 1;
    const std::size_t row_bytes =
        static_cast<std::size_t>(img.width()) * img.channels() * bytes_per_sample;
    std::vector<std::uint8_t> pixels(row_bytes * img.height());
    auto src = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::isfinite(src[i]) ? std::clamp(src[i], 0.0, 1.0) : 0.0;
        if (depth == BitDepth::u16) {
            const auto code = static_cast<unsigned>(std::lround(v * 65535.0));
            pixels[2 * i] = static_cast<std::uint8_t>(code >> 8);
            pixels[2 * i + 1] = static_cast<std::uint8_t>(code & 0xff);
        } else {
            pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = pixels.data() + row_bytes * static_cast<std::size_t>(y);
    }
    std::vector<std::uint8_t> encoded;
    PngErrorSink sink{};
    if (!encode_into(&rows, img.width(), img.height(), img.channels(), static_cast<int>(depth), &encoded,
                     &sink)) {
        fail(ErrorCode::io_write, std::string("PNG encoding failed: ") + sink.message);
    }
    return encoded;
}

void write_png(const std::filesystem::path& path, const ImageF& img, BitDepth depth) {
    write_file(path, encode_png(img, depth));
}

void write_map_png(const std::filesystem::path& path, const ScalarMap& map) {
    write_png(path, to_image(map), BitDepth::u16);
}

ScalarMap read_map_png(const std::filesystem::path& path) {
    ImageF img = read_png(path);
    if (img.channels() != 1) {
        fail(ErrorCode::io_read, path.string() + ": map PNG must be single-channel");
    }
    return to_scalar_map(img);
}

std::vector<std::uint8_t> encode_fmap(const ScalarMap& map) {
    std::vector<std::uint8_t> out{'F', 'M', 'A', 'P'};
    out.reserve(16 + 4 * map.size());
    store_u32le(out, static_cast<std::uint32_t>(map.height()));
    store_u32le(out, static_cast<std::uint32_t>(map.width()));
    store_u32le(out, 0);
    for (double v : map.data()) {
        store_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

ScalarMap decode_fmap(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "FMAP", 4) != 0) {
        fail(ErrorCode::io_read, "not an FMAP file");
    }
    const std::uint32_t height = load_u32le(bytes.data() + 4);
    const std::uint32_t width = load_u32le(bytes.data() + 8);
    if (height == 0 || width == 0 || height > (1u << 16) || width > (1u << 16)) {
        fail(ErrorCode::io_read, "FMAP header has invalid dimensions");
    }
    const std::size_t count = static_cast<std::size_t>(height) * width;
    if (bytes.size() != 16 + 4 * count) {
        fail(ErrorCode::io_read, "FMAP payload length does not match header");
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(load_u32le(bytes.data() + 16 + 4 * i));
    }
    if (!all_finite(data)) {
        fail(ErrorCode::io_read, "FMAP contains non-finite samples");
    }
    return ScalarMap(static_cast<int>(height), static_cast<int>(width), std::move(data));
}

void write_fmap(const std::filesystem::path& path, const ScalarMap& map) { write_file(path, encode_fmap(map)); }

ScalarMap read_fmap(const std::filesystem::path& path) {
    try {
        return decode_fmap(read_file(path));
    } catch (const Error& e) {
        fail(ErrorCode::io_read, path.string() + ": " + e.what());
    }
}

ScalarMap read_map(const std::filesystem::path& path) {
    return lowercase_extension(path) == ".png" ? read_map_png(path) : read_fmap(path);
}

}  // namespace fumo
