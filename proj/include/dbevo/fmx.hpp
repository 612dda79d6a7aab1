#pragma once

// FMX feature interchange format (all integers little-endian):
//
//   offset 0   "FMX1"
//          4   n  (u32)   rows
//          8   d  (u32)   columns
//          12  c  (u32)   class count, 0 = unlabeled
//          16  n*d f32    features, row-major
//              n   u16    labels, present only when c > 0, each < c
//              u32 + text optional metadata: byte length, then UTF-8 class
//                         names, each terminated by '\n'
//
// The file size must match this arithmetic exactly.

#include "dbevo/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dbevo {

struct FmxData {
    Matrix features;
    std::vector<std::uint32_t> labels;  // empty when unlabeled
    std::uint32_t num_classes = 0;
    std::vector<std::string> class_names;

    bool labeled() const noexcept { return num_classes > 0; }
};

inline constexpr std::size_t kFmxHeaderBytes = 16;

/// Features are narrowed to 32-bit floats. Rejects labels when num_classes is 0
/// (InvalidArgument), non-finite features (NonFinite) and labels >= num_classes
/// (LabelOutOfRange).
std::vector<std::uint8_t> encode_fmx(const FmxData& data);
FmxData decode_fmx(std::span<const std::uint8_t> bytes);

void write_fmx(const std::filesystem::path& path, const FmxData& data);
FmxData read_fmx(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace dbevo
