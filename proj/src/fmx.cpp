#include "dbevo/fmx.hpp"

#include "bytes.hpp"
#include "dbevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

namespace dbevo {

using detail::get_le;
using detail::put_le;

namespace {

constexpr char kMagic[4] = {'F', 'M', 'X', '1'};

} // namespace

std::vector<std::uint8_t> encode_fmx(const FmxData& data) {
    const std::size_t n = data.features.rows();
    const std::size_t d = data.features.cols();
    constexpr auto kU32Max = std::numeric_limits<std::uint32_t>::max();
    if (n > kU32Max || d > kU32Max) {
        fail(Errc::InvalidArgument, "matrix too large for FMX");
    }
    if (data.num_classes == 0 && !data.labels.empty()) {
        fail(Errc::InvalidArgument, "labels supplied for an unlabeled (c = 0) FMX file");
    }
    if (data.num_classes > 0) {
        if (data.num_classes > 65536) {
            fail(Errc::InvalidArgument, "class count exceeds the 16-bit label range");
        }
        if (data.labels.size() != n) {
            fail(Errc::ShapeMismatch, "expected " + std::to_string(n) + " labels, got " +
                                          std::to_string(data.labels.size()));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (data.labels[i] >= data.num_classes) {
                fail(Errc::LabelOutOfRange, "label " + std::to_string(data.labels[i]) + " at row " +
                                                std::to_string(i) + " is not below c = " +
                                                std::to_string(data.num_classes));
            }
        }
        if (!data.class_names.empty() && data.class_names.size() != data.num_classes) {
            fail(Errc::InvalidArgument, "class name count does not match c");
        }
    }
    std::string meta;
    for (const auto& name : data.class_names) {
        if (name.find('\n') != std::string::npos) {
            fail(Errc::InvalidArgument, "class names may not contain newlines");
        }
        meta += name;
        meta += '\n';
    }
    if (meta.size() > kU32Max) {
        fail(Errc::InvalidArgument, "metadata too large");
    }

    std::vector<std::uint8_t> out;
    out.reserve(kFmxHeaderBytes + 4 * n * d + 2 * n + (meta.empty() ? 0 : 4 + meta.size()));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le(out, static_cast<std::uint32_t>(n));
    put_le(out, static_cast<std::uint32_t>(d));
    put_le(out, data.num_classes);
    for (double x : data.features.data()) {
        const auto f = static_cast<float>(x);
        if (!std::isfinite(f)) {
            fail(Errc::NonFinite, "feature value is not finite at 32-bit precision");
        }
        detail::put_f32(out, f);
    }
    if (data.num_classes > 0) {
        for (auto y : data.labels) {
            put_le(out, static_cast<std::uint16_t>(y));
        }
    }
    if (!data.class_names.empty()) {
        put_le(out, static_cast<std::uint32_t>(meta.size()));
        out.insert(out.end(), meta.begin(), meta.end());
    }
    return out;
}

FmxData decode_fmx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                        [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        fail(Errc::BadMagic, "missing FMX1 magic");
    }
    if (bytes.size() < kFmxHeaderBytes) {
        fail(Errc::Truncated, "file is shorter than the 16-byte FMX header");
    }
    const auto n = get_le<std::uint32_t>(bytes, 4);
    const auto d = get_le<std::uint32_t>(bytes, 8);
    const auto c = get_le<std::uint32_t>(bytes, 12);

    const std::uint64_t feature_bytes = 4ULL * n * d;
    const std::uint64_t label_bytes = c > 0 ? 2ULL * n : 0;
    const std::uint64_t body_end = kFmxHeaderBytes + feature_bytes + label_bytes;
    if (bytes.size() < body_end) {
        fail(Errc::Truncated, "header declares " + std::to_string(body_end) + " bytes of data, file has " +
                                  std::to_string(bytes.size()));
    }

    FmxData out;
    out.num_classes = c;
    out.features = Matrix(n, d);
    std::size_t pos = kFmxHeaderBytes;
    for (double& x : out.features.data()) {
        x = static_cast<double>(detail::get_f32(bytes, pos));
        pos += 4;
    }
    if (c > 0) {
        out.labels.resize(n);
        for (std::uint32_t i = 0; i < n; ++i, pos += 2) {
            const auto y = get_le<std::uint16_t>(bytes, pos);
            if (y >= c) {
                fail(Errc::LabelOutOfRange, "label " + std::to_string(y) + " at row " + std::to_string(i) +
                                                " is not below c = " + std::to_string(c));
            }
            out.labels[i] = y;
        }
    }

    const std::size_t remaining = bytes.size() - pos;
    if (remaining == 0) {
        return out;
    }
    if (remaining < 4) {
        fail(Errc::Truncated, "metadata length field is cut short");
    }
    const auto meta_len = get_le<std::uint32_t>(bytes, pos);
    pos += 4;
    if (remaining - 4 < meta_len) {
        fail(Errc::Truncated, "metadata declares " + std::to_string(meta_len) + " bytes, file has " +
                                  std::to_string(remaining - 4));
    }
    if (remaining - 4 > meta_len) {
        fail(Errc::SizeMismatch, std::to_string(remaining - 4 - meta_len) + " unexpected trailing bytes");
    }
    std::string line;
    for (std::size_t i = 0; i < meta_len; ++i) {
        const char ch = static_cast<char>(bytes[pos + i]);
        if (ch == '\n') {
            out.class_names.push_back(line);
            line.clear();
        } else {
            line += ch;
        }
    }
    if (!line.empty()) {
        out.class_names.push_back(line);
    }
    return out;
}

void write_fmx(const std::filesystem::path& path, const FmxData& data) {
    write_file_bytes(path, encode_fmx(data));
}

FmxData read_fmx(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_fmx(bytes);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(Errc::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(Errc::IoFailure, "read error on " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(Errc::IoFailure, "cannot create " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(Errc::IoFailure, "write error on " + path.string());
    }
}

} // namespace dbevo
