#pragma once

#include <filesystem>
#include <string>

#include "icomp/float_map.hpp"

namespace icomp {

// Portable float map I/O. Three-channel maps are written with the "PF"
// magic, one-channel maps with "Pf"; the scale field is always -1.0
// (little-endian). Rows are stored bottom-to-top as the format requires.

FloatMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const FloatMap& map);

std::string encode_pfm(const FloatMap& map);
FloatMap decode_pfm(const std::string& bytes);

}  // namespace icomp
