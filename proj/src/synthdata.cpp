#include "dbevo/synthdata.hpp"

#include "dbevo/error.hpp"
#include "dbevo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dbevo {

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (auto label : labels) {
        if (label < counts.size()) {
            ++counts[label];
        }
    }
    return counts;
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
    LabeledDataset out;
    out.features = Matrix(rows.size(), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = features.row(rows[r]);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.labels.push_back(labels[rows[r]]);
    }
    out.class_names = class_names;
    out.seed = seed;
    return out;
}

LabeledDataset gaussian_mixture(const MixtureSpec& spec, std::uint64_t seed) {
    if (spec.classes.size() < 2) {
        fail(Errc::BadSpec, "a mixture needs at least 2 classes");
    }
    const std::size_t dim = spec.input_dim();
    if (dim == 0) {
        fail(Errc::BadSpec, "class means must be nonempty");
    }
    std::vector<std::vector<double>> means;
    std::size_t total = 0;
    for (const auto& c : spec.classes) {
        if (c.mean.size() != dim) {
            fail(Errc::BadSpec, "class '" + c.name + "' mean has wrong dimension");
        }
        if (!(c.stddev > 0.0) || !std::isfinite(c.stddev)) {
            fail(Errc::BadSpec, "class '" + c.name + "' needs a positive standard deviation");
        }
        if (c.count == 0) {
            fail(Errc::BadSpec, "class '" + c.name + "' needs a positive sample count");
        }
        means.push_back(c.mean);
        total += c.count;
    }

    for (const auto& pair : spec.overlap_pairs) {
        if (pair.first >= means.size() || pair.second >= means.size() || pair.first == pair.second) {
            fail(Errc::BadSpec, "overlap pair references invalid classes");
        }
        if (!(pair.distance >= 0.0)) {
            fail(Errc::BadSpec, "overlap distance must be nonnegative");
        }
        const auto& anchor = means[pair.first];
        auto& moved = means[pair.second];
        std::vector<double> dir(dim);
        double norm = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            dir[k] = moved[k] - anchor[k];
            norm += dir[k] * dir[k];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            std::fill(dir.begin(), dir.end(), 0.0);
            dir[0] = 1.0;
            norm = 1.0;
        }
        for (std::size_t k = 0; k < dim; ++k) {
            moved[k] = anchor[k] + pair.distance * dir[k] / norm;
        }
    }

    LabeledDataset out;
    out.features = Matrix(total, dim);
    out.labels.reserve(total);
    out.seed = seed;
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        Rng rng(mix_seed(seed, c));
        const auto& cls = spec.classes[c];
        out.class_names.push_back(cls.name);
        for (std::size_t i = 0; i < cls.count; ++i, ++row) {
            auto dst = out.features.row(row);
            for (std::size_t k = 0; k < dim; ++k) {
                dst[k] = static_cast<double>(static_cast<float>(means[c][k] + cls.stddev * rng.normal()));
            }
            out.labels.push_back(static_cast<std::uint32_t>(c));
        }
    }
    return out;
}

MixtureSpec reference_mixture(double hard_distance, std::size_t per_class) {
    constexpr std::size_t kDim = 16;
    constexpr double kFar = 8.0;
    auto axis = [](std::size_t k, double scale) {
        std::vector<double> v(kDim, 0.0);
        v[k] = scale;
        return v;
    };
    MixtureSpec spec;
    spec.classes = {
        {"cat", std::vector<double>(kDim, 0.0), 1.0, per_class},
        {"dog", axis(0, kFar), 1.0, per_class},
        {"frog", axis(1, kFar), 1.0, per_class},
        {"truck", axis(2, kFar), 1.0, per_class},
    };
    spec.overlap_pairs = {{0, 1, hard_distance}};
    return spec;
}

TrainTestSplit split_train_test(const LabeledDataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        fail(Errc::InvalidArgument, "test fraction must lie in [0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(data.num_classes());
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class.at(data.labels[i]).push_back(i);
    }
    std::vector<bool> is_test(data.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        Rng rng(mix_seed(seed ^ 0x5EEDULL, c));
        rng.shuffle(std::span<std::size_t>(idx));
        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * test_fraction + 1e-9));
        for (std::size_t i = 0; i < n_test; ++i) {
            is_test[idx[i]] = true;
        }
    }
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (is_test[i] ? test_rows : train_rows).push_back(i);
    }
    return {data.subset(train_rows), data.subset(test_rows)};
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x0E90C4ULL + epoch));
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

} // namespace dbevo
