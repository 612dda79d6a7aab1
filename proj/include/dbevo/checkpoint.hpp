#pragma once

// Checkpoint container and classifier-head interchange.
//
// Checkpoint layout: "CKP1", u32 LE header length, UTF-8 JSON header, then
// every parameter tensor as 64-bit LE floats. The header carries the network
// configuration, epoch, train accuracy, free-form string metadata and a
// manifest of {name, rows, cols, offset} with offsets relative to the first
// data byte.
//
// Head files are JSON: {"format": "head1", "num_classes": C, "dim": d,
// "class_names": [...], "weight": [[...] x C], "bias": [...]}.

#include "dbevo/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dbevo {

struct CheckpointMeta {
    std::uint64_t epoch = 0;
    double train_accuracy = 0.0;
    std::map<std::string, std::string> extra;

    friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
    NetParams params;
    CheckpointMeta meta;
};

std::vector<std::uint8_t> encode_checkpoint(const NetParams& params, const CheckpointMeta& meta);
/// Throws BadMagic, BadHeader (unparseable header) or ManifestMismatch (missing,
/// misshapen, overlapping or out-of-bounds tensors; data size disagreement).
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const std::filesystem::path& path, const NetParams& params, const CheckpointMeta& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string encode_head(const ClassifierHead& head);
ClassifierHead decode_head(const std::string& text);
void write_head(const std::filesystem::path& path, const ClassifierHead& head);
ClassifierHead read_head(const std::filesystem::path& path);

} // namespace dbevo
