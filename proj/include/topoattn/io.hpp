#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoattn/grid.hpp"
#include "topoattn/tensor.hpp"

namespace topoattn {

// ---------------------------------------------------------------------------
// Netpbm graymaps (P2 ASCII / P5 binary, maxval <= 65535)
// ---------------------------------------------------------------------------

/// Raw integer samples of a graymap, before normalization.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 0;
  std::vector<std::uint16_t> samples;
};

/// Parses PGM bytes. Throws ParseError with the byte offset of the first problem.
PgmImage parse_pgm(std::span<const std::byte> bytes);

/// Returns a GridMap with values sample / maxval.
GridMap load_pgm(const std::filesystem::path& path);

/// Encodes levels as binary P5 with maxval = levels.max_level().
std::string encode_pgm(const LevelMap& levels);
void save_pgm(const LevelMap& levels, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// TNSR raw tensors: "TNSR1\n", "<ndim> <d0> <d1> ...\n", little-endian float32 payload
// ---------------------------------------------------------------------------

struct RawTensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;
};

RawTensor parse_tensor(std::span<const std::byte> bytes);
std::string encode_tensor(const RawTensor& tensor);

RawTensor read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const RawTensor& tensor, const std::filesystem::path& path);

/// 2-D grids are stored with dims (height, width).
void save_tensor(const GridMap& grid, const std::filesystem::path& path);
GridMap load_tensor(const std::filesystem::path& path);

/// Feature tensors are stored with dims (height, width, channels).
void save_feature(const FeatureTensor& tensor, const std::filesystem::path& path);
FeatureTensor load_feature(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

std::vector<std::byte> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace topoattn
