#include "dbevo/checkpoint.hpp"

#include "bytes.hpp"
#include "dbevo/error.hpp"
#include "dbevo/fmx.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dbevo {

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', '1'};

json config_to_json(const NetConfig& c) {
    return json{{"input_dim", c.input_dim},
                {"hidden", c.hidden},
                {"num_classes", c.num_classes},
                {"variant", std::string(variant_name(c.variant))},
                {"seed", c.seed},
                {"class_names", c.class_names}};
}

NetConfig config_from_json(const json& j) {
    NetConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.class_names = j.at("class_names").get<std::vector<std::string>>();
    return c;
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const NetParams& params, const CheckpointMeta& meta) {
    json manifest = json::array();
    std::uint64_t offset = 0;
    for (const auto& r : param_refs(params)) {
        manifest.push_back({{"name", r.name}, {"rows", r.rows}, {"cols", r.cols}, {"offset", offset}});
        offset += 8ULL * r.values.size();
    }
    const json header{{"architecture", config_to_json(params.config)},
                      {"epoch", meta.epoch},
                      {"train_accuracy", meta.train_accuracy},
                      {"extra", meta.extra},
                      {"manifest", manifest}};
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(8 + text.size() + offset);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    detail::put_le(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& r : param_refs(params)) {
        for (double x : r.values) {
            detail::put_f64(out, x);
        }
    }
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                        [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        fail(Errc::BadMagic, "missing CKP1 magic");
    }
    if (bytes.size() < 8) {
        fail(Errc::BadHeader, "header length field is cut short");
    }
    const auto header_len = detail::get_le<std::uint32_t>(bytes, 4);
    if (bytes.size() - 8 < header_len) {
        fail(Errc::BadHeader, "header extends past the end of the file");
    }
    const std::string text(reinterpret_cast<const char*>(bytes.data()) + 8, header_len);

    Checkpoint ck;
    json manifest;
    try {
        const json header = json::parse(text);
        ck.params.config = config_from_json(header.at("architecture"));
        ck.meta.epoch = header.at("epoch").get<std::uint64_t>();
        ck.meta.train_accuracy = header.at("train_accuracy").get<double>();
        ck.meta.extra = header.at("extra").get<std::map<std::string, std::string>>();
        manifest = header.at("manifest");
        ck.params.config.validate();
    } catch (const json::exception& e) {
        fail(Errc::BadHeader, e.what());
    } catch (const Error& e) {
        fail(Errc::BadHeader, e.what());
    }

    // Shapes come from the architecture; the manifest must agree with them.
    ck.params = zeros_like(init_params(ck.params.config));
    const auto data = bytes.subspan(8 + header_len);
    auto refs = param_refs(ck.params);
    if (!manifest.is_array() || manifest.size() != refs.size()) {
        fail(Errc::ManifestMismatch, "manifest lists " + std::to_string(manifest.size()) + " tensors, architecture has " +
                                         std::to_string(refs.size()));
    }
    std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
    std::uint64_t total = 0;
    for (auto& r : refs) {
        const auto it = std::find_if(manifest.begin(), manifest.end(), [&](const json& e) {
            return e.is_object() && e.value("name", std::string()) == r.name;
        });
        if (it == manifest.end()) {
            fail(Errc::ManifestMismatch, "tensor '" + r.name + "' missing from manifest");
        }
        std::uint64_t rows = 0;
        std::uint64_t cols = 0;
        std::uint64_t offset = 0;
        try {
            rows = it->at("rows").get<std::uint64_t>();
            cols = it->at("cols").get<std::uint64_t>();
            offset = it->at("offset").get<std::uint64_t>();
        } catch (const json::exception& e) {
            fail(Errc::ManifestMismatch, std::string("malformed manifest entry: ") + e.what());
        }
        if (rows != r.rows || cols != r.cols) {
            fail(Errc::ManifestMismatch, "tensor '" + r.name + "' shape disagrees with the architecture");
        }
        const std::uint64_t len = 8ULL * r.values.size();
        if (offset > data.size() || data.size() - offset < len) {
            fail(Errc::ManifestMismatch, "tensor '" + r.name + "' extends past the data block");
        }
        for (std::size_t k = 0; k < r.values.size(); ++k) {
            r.values[k] = detail::get_f64(data, offset + 8 * k);
        }
        extents.emplace_back(offset, offset + len);
        total += len;
    }
    std::sort(extents.begin(), extents.end());
    for (std::size_t k = 1; k < extents.size(); ++k) {
        if (extents[k].first < extents[k - 1].second) {
            fail(Errc::ManifestMismatch, "manifest tensors overlap");
        }
    }
    if (total != data.size()) {
        fail(Errc::ManifestMismatch, "data block holds " + std::to_string(data.size()) + " bytes, manifest covers " +
                                         std::to_string(total));
    }
    ck.params.head.class_names = ck.params.config.class_names;
    return ck;
}

void write_checkpoint(const std::filesystem::path& path, const NetParams& params, const CheckpointMeta& meta) {
    write_file_bytes(path, encode_checkpoint(params, meta));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_checkpoint(bytes);
}

std::string encode_head(const ClassifierHead& head) {
    json weight = json::array();
    for (std::size_t r = 0; r < head.weight.rows(); ++r) {
        const auto row = head.weight.row(r);
        weight.push_back(std::vector<double>(row.begin(), row.end()));
    }
    const json j{{"format", "head1"},
                 {"num_classes", head.num_classes()},
                 {"dim", head.dim()},
                 {"class_names", head.class_names},
                 {"weight", weight},
                 {"bias", head.bias}};
    return j.dump(1) + "\n";
}

ClassifierHead decode_head(const std::string& text) {
    ClassifierHead head;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "head1") {
            fail(Errc::BadHeader, "unsupported head format");
        }
        const auto c = j.at("num_classes").get<std::size_t>();
        const auto d = j.at("dim").get<std::size_t>();
        const auto rows = j.at("weight").get<std::vector<std::vector<double>>>();
        head.bias = j.at("bias").get<std::vector<double>>();
        head.class_names = j.value("class_names", std::vector<std::string>{});
        if (rows.size() != c || head.bias.size() != c ||
            (!head.class_names.empty() && head.class_names.size() != c)) {
            fail(Errc::ShapeMismatch, "head arrays disagree with num_classes");
        }
        head.weight = Matrix(c, d);
        for (std::size_t r = 0; r < c; ++r) {
            if (rows[r].size() != d) {
                fail(Errc::ShapeMismatch, "head weight row " + std::to_string(r) + " has the wrong length");
            }
            std::copy(rows[r].begin(), rows[r].end(), head.weight.row(r).begin());
        }
    } catch (const json::exception& e) {
        fail(Errc::BadHeader, e.what());
    }
    if (!head.weight.all_finite() ||
        !std::all_of(head.bias.begin(), head.bias.end(), [](double x) { return std::isfinite(x); })) {
        fail(Errc::NonFinite, "head contains NaN or Inf");
    }
    return head;
}

void write_head(const std::filesystem::path& path, const ClassifierHead& head) {
    const std::string text = encode_head(head);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ClassifierHead read_head(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_head(std::string(bytes.begin(), bytes.end()));
}

} // namespace dbevo
