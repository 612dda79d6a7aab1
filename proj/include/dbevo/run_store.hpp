#pragma once

// On-disk run archives. A run directory holds
//
//   manifest.json   run id, divergence flag, milestone list, file names
//   config.txt      frozen key=value configuration snapshot, sorted by key
//   metrics.csv     per-epoch log
//   ckpt_NNN.ckp    one checkpoint per milestone, in milestone order
//   train.fmx       training set the run was fit on
//   test.fmx        held-out set (may be empty)
//
// Nothing time-dependent is written, so identical runs give identical bytes.

#include "dbevo/synthdata.hpp"
#include "dbevo/train.hpp"

#include <filesystem>

namespace dbevo {

struct StoredRun {
    RunArchive archive;
    LabeledDataset train_set;
    LabeledDataset test_set;
};

/// Creates `dir`; refuses (IoFailure) if it exists and is not empty.
void save_run(const std::filesystem::path& dir, const RunArchive& run, const LabeledDataset& train_set,
              const LabeledDataset& test_set);
StoredRun load_run(const std::filesystem::path& dir);

/// key=value lines; '#' starts a comment line; blank lines ignored.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::string format_key_values(const std::map<std::string, std::string>& kv);

} // namespace dbevo
