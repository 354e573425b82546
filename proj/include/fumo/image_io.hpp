#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fumo/image.hpp"

namespace fumo {

enum class BitDepth { u8 = 8, u16 = 16 };

// Decodes 8/16-bit PNG. Gray(+alpha) becomes 1 channel, everything else 3;
// alpha is dropped. Sample x maps to x / (2^depth - 1).
ImageF read_png(const std::filesystem::path& path);
ImageF decode_png(const std::vector<std::uint8_t>& bytes);

// Samples are clamped to [0,1] and rounded to the nearest code.
void write_png(const std::filesystem::path& path, const ImageF& img, BitDepth depth = BitDepth::u8);
std::vector<std::uint8_t> encode_png(const ImageF& img, BitDepth depth = BitDepth::u8);

// 16-bit grayscale export of a map in [0,1]: code = round(x * 65535).
void write_map_png(const std::filesystem::path& path, const ScalarMap& map);
ScalarMap read_map_png(const std::filesystem::path& path);

// Raw map: "FMAP", u32 height, u32 width, u32 0, then LE float32 samples.
std::vector<std::uint8_t> encode_fmap(const ScalarMap& map);
ScalarMap decode_fmap(const std::vector<std::uint8_t>& bytes);
void write_fmap(const std::filesystem::path& path, const ScalarMap& map);
ScalarMap read_fmap(const std::filesystem::path& path);

// Reads FMAP or PNG based on the file extension.
ScalarMap read_map(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fumo
