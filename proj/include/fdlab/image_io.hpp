#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fdlab/raster.hpp"

namespace fdlab {

// PFM: "Pf" (1 channel) / "PF" (3 channels), scale -1.0 (little-endian),
// float32 samples, scanlines stored bottom row first.
std::string encode_pfm(const Raster& raster);
Raster decode_pfm(std::string_view bytes);

void write_pfm(const std::filesystem::path& path, const Raster& raster);
Raster read_pfm(const std::filesystem::path& path);

// 8-bit binary PGM. Values are clamped to [0,1] and mapped with
// round-half-up; 3-channel input is written as its channel mean.
std::string encode_pgm(const Raster& raster);
void write_pgm(const std::filesystem::path& path, const Raster& raster);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace fdlab
