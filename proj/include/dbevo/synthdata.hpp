#pragma once

// Seeded Gaussian-mixture datasets used as a desk-scale stand-in for image
// classification data.

#include "dbevo/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dbevo {

struct LabeledDataset {
    Matrix features;                 // n×p
    std::vector<std::uint32_t> labels;
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::vector<std::size_t> class_counts() const;
    /// Rows in the given order.
    LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

struct ClassSpec {
    std::string name;
    std::vector<double> mean;
    double stddev = 1.0;
    std::size_t count = 0;
};

/// Moves the mean of class `second` onto the ray from `first`'s mean through
/// its own, at exactly `distance` from `first`'s mean.
struct OverlapPair {
    std::size_t first = 0;
    std::size_t second = 1;
    double distance = 1.0;
};

struct MixtureSpec {
    std::vector<ClassSpec> classes;
    std::vector<OverlapPair> overlap_pairs;

    std::size_t input_dim() const { return classes.empty() ? 0 : classes.front().mean.size(); }
};

/// Samples each class in turn (rows grouped by class). Values are rounded to
/// 32-bit precision so datasets survive the FMX interchange format unchanged.
/// Throws BadSpec on nonpositive counts or deviations.
LabeledDataset gaussian_mixture(const MixtureSpec& spec, std::uint64_t seed);

/// Mean separation of the overlapping pair in the default task, in units of
/// the per-class standard deviation.
inline constexpr double kDefaultHardDistance = 3.0;

/// The default task: 4 classes in 16 dimensions with 500 samples each. Classes
/// 0 and 1 form the overlapping "hard pair"; the others sit far apart.
MixtureSpec reference_mixture(double hard_distance = kDefaultHardDistance, std::size_t per_class = 500);

struct TrainTestSplit {
    LabeledDataset train;
    LabeledDataset test;
};

/// Stratified split: floor(count * test_fraction) samples of every class go to
/// the test set, chosen by a seeded shuffle. Both halves keep source order.
TrainTestSplit split_train_test(const LabeledDataset& data, double test_fraction, std::uint64_t seed);

/// Visiting order for one epoch, a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

} // namespace dbevo
