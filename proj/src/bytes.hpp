#pragma once

// Little-endian byte packing shared by the binary formats.

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace dbevo::detail {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

template <class U>
U get_le(std::span<const std::uint8_t> in, std::size_t offset) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(static_cast<U>(in[offset + i]) << (8 * i));
    }
    return value;
}

inline void put_f32(std::vector<std::uint8_t>& out, float x) { put_le(out, std::bit_cast<std::uint32_t>(x)); }
inline void put_f64(std::vector<std::uint8_t>& out, double x) { put_le(out, std::bit_cast<std::uint64_t>(x)); }

inline float get_f32(std::span<const std::uint8_t> in, std::size_t offset) {
    return std::bit_cast<float>(get_le<std::uint32_t>(in, offset));
}
inline double get_f64(std::span<const std::uint8_t> in, std::size_t offset) {
    return std::bit_cast<double>(get_le<std::uint64_t>(in, offset));
}

} // namespace dbevo::detail
