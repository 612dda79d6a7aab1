#include "dbevo/run_store.hpp"

#include "dbevo/checkpoint.hpp"
#include "dbevo/error.hpp"
#include "dbevo/fmx.hpp"
#include "dbevo/store.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace dbevo {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kRunFormat = "dbevo-run1";

std::string checkpoint_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt_%03zu.ckp", index);
    return buf;
}

std::uint64_t parse_count(const std::string& s) {
    const double x = parse_number(s);
    if (!(x >= 0.0) || x != static_cast<double>(static_cast<std::uint64_t>(x))) {
        fail(Errc::InvalidArgument, "expected a non-negative integer, got '" + s + "'");
    }
    return static_cast<std::uint64_t>(x);
}

} // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(Errc::BadHeader, "line " + std::to_string(lineno) + ": expected key=value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string format_key_values(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k + "=" + v + "\n";
    }
    return out;
}

void save_run(const fs::path& dir, const RunArchive& run, const LabeledDataset& train_set,
              const LabeledDataset& test_set) {
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
        fail(Errc::IoFailure, "refusing to overwrite non-empty directory " + dir.string());
    }
    fs::create_directories(dir, ec);
    if (ec) {
        fail(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }

    json milestones = json::array();
    for (std::size_t k = 0; k < run.milestones.size(); ++k) {
        const Milestone& m = run.milestones[k];
        CheckpointMeta meta{m.epoch, m.train_accuracy, {{"run_id", run.run_id}, {"milestone", std::to_string(k)}}};
        write_checkpoint(dir / checkpoint_name(k), m.params, meta);
        milestones.push_back({{"index", k},
                              {"epoch", m.epoch},
                              {"train_accuracy", m.train_accuracy},
                              {"checkpoint", checkpoint_name(k)}});
    }
    write_text(dir / "config.txt", format_key_values(run.config));
    const std::size_t classes = run.milestones.empty() ? 0 : run.milestones.front().params.config.num_classes;
    write_text(dir / "metrics.csv", metrics_csv(run.log, classes));
    write_fmx(dir / "train.fmx", to_fmx(train_set));
    write_fmx(dir / "test.fmx", to_fmx(test_set));
    const json manifest{{"format", kRunFormat},
                        {"run_id", run.run_id},
                        {"diverged", run.diverged},
                        {"divergence", run.divergence},
                        {"milestones", milestones},
                        {"config", "config.txt"},
                        {"metrics", "metrics.csv"},
                        {"train", "train.fmx"},
                        {"test", "test.fmx"}};
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

StoredRun load_run(const fs::path& dir) {
    StoredRun out;
    RunArchive& run = out.archive;
    json manifest;
    try {
        manifest = json::parse(read_text(dir / "manifest.json"));
        if (manifest.at("format").get<std::string>() != kRunFormat) {
            fail(Errc::BadHeader, "unknown run format in " + dir.string());
        }
        run.run_id = manifest.at("run_id").get<std::string>();
        run.diverged = manifest.at("diverged").get<bool>();
        run.divergence = manifest.at("divergence").get<std::string>();
        for (const auto& m : manifest.at("milestones")) {
            const Checkpoint ck = read_checkpoint(dir / m.at("checkpoint").get<std::string>());
            if (ck.meta.epoch != m.at("epoch").get<std::uint64_t>()) {
                fail(Errc::ManifestMismatch, "checkpoint epoch disagrees with the run manifest");
            }
            run.milestones.push_back({ck.meta.epoch, ck.meta.train_accuracy, ck.params});
        }
        run.config = parse_key_values(read_text(dir / manifest.at("config").get<std::string>()));
        const auto rows = parse_simple_csv(read_text(dir / manifest.at("metrics").get<std::string>()));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() < 4) {
                fail(Errc::BadHeader, "short row in metrics.csv");
            }
            EpochLog e;
            e.epoch = parse_count(row[0]);
            e.lr = parse_number(row[1]);
            e.train_loss = parse_number(row[2]);
            e.train_accuracy = parse_number(row[3]);
            for (std::size_t c = 4; c < row.size(); ++c) {
                e.recall.push_back(parse_number(row[c]));
            }
            run.log.push_back(std::move(e));
        }
        out.train_set = from_fmx(read_fmx(dir / manifest.at("train").get<std::string>()));
        const FmxData test = read_fmx(dir / manifest.at("test").get<std::string>());
        out.test_set = test.labeled() ? from_fmx(test) : LabeledDataset{test.features, {}, out.train_set.class_names};
    } catch (const json::exception& e) {
        fail(Errc::BadHeader, std::string("run manifest: ") + e.what());
    }
    if (run.milestones.empty()) {
        fail(Errc::ManifestMismatch, "run " + dir.string() + " has no milestones");
    }
    return out;
}

} // namespace dbevo
