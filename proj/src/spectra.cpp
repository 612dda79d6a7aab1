#include "dbevo/spectra.hpp"

#include "dbevo/boundary.hpp"
#include "dbevo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dbevo {

Matrix autocorrelation(const Matrix& phi) {
    if (!phi.all_finite()) {
        fail(Errc::NonFinite, "feature matrix contains NaN or Inf");
    }
    const std::size_t d = phi.cols();
    Matrix a(d, d);
    for (std::size_t r = 0; r < phi.rows(); ++r) {
        const auto row = phi.row(r);
        for (std::size_t p = 0; p < d; ++p) {
            const double x = row[p];
            for (std::size_t q = p; q < d; ++q) {
                a(p, q) += x * row[q];
            }
        }
    }
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < p; ++q) {
            a(p, q) = a(q, p);
        }
    }
    return a;
}

SpectrumReport acm_spectrum(const Matrix& phi) {
    SpectrumReport rep;
    rep.n = phi.rows();
    rep.d = phi.cols();
    if (rep.d == 0) {
        return rep;
    }
    const SymEigResult eig = sym_eig(autocorrelation(phi));
    rep.values = eig.values;
    for (auto& v : rep.values) {
        v = std::max(v, 0.0);
    }
    rep.rank = std::min(numerical_rank(rep.values, rep.n, rep.d), std::min(rep.n, rep.d));
    return rep;
}

std::vector<double> explained_variances(const Matrix& phi, std::size_t m) {
    const std::size_t n = phi.rows();
    const std::size_t d = phi.cols();
    if (n < 2 || m > std::min(n - 1, d)) {
        fail(Errc::TooFewSamples, std::to_string(n) + " samples in " + std::to_string(d) +
                                      " dimensions cannot give " + std::to_string(m) + " variances");
    }
    if (m == 0) {
        return {};
    }
    return pca_fit(phi, m).explained_variances();
}

std::vector<VariancePoint> variance_evolution(const RunArchive& run, std::size_t i, std::size_t j,
                                              const LabeledDataset& data, std::size_t m) {
    if (run.milestones.empty()) {
        fail(Errc::InvalidArgument, "run archive has no milestones");
    }
    std::vector<VariancePoint> out;
    for (const auto& ms : run.milestones) {
        const ForwardResult fr = forward(ms.params, data.features);
        const PairSelection sel = pair_matrix(fr.embeddings, data.labels, i, j);
        out.push_back({ms.epoch, ms.train_accuracy, explained_variances(sel.features, m)});
    }
    return out;
}

std::vector<ProfileRow> optimizer_profile(const std::vector<RunArchive>& runs, std::size_t i, std::size_t j,
                                          const LabeledDataset& train_set, const LabeledDataset& test_set) {
    std::vector<ProfileRow> rows;
    for (const auto& run : runs) {
        if (run.milestones.empty()) {
            fail(Errc::InvalidArgument, "run '" + run.run_id + "' has no milestones");
        }
        const Milestone& last = run.final_milestone();
        ProfileRow row;
        row.name = run.run_id;
        row.train_accuracy = last.train_accuracy;
        row.test_accuracy = evaluate(last.params, test_set).accuracy;
        row.diverged = run.diverged;
        const ForwardResult fr = forward(last.params, train_set.features);
        row.spectrum = acm_spectrum(pair_matrix(fr.embeddings, train_set.labels, i, j).features);
        row.spectrum.pair = {i, j};
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ProfileRow& a, const ProfileRow& b) { return a.test_accuracy > b.test_accuracy; });
    return rows;
}

ThresholdResult best_threshold(std::span<const double> coord, std::span<const std::uint8_t> side) {
    const std::size_t n = coord.size();
    if (side.size() != n) {
        fail(Errc::ShapeMismatch, "coordinate and side counts differ");
    }
    if (n == 0) {
        fail(Errc::EmptyDataset, "threshold search needs samples");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coord[a] < coord[b]; });

    // correct = first-class samples left of the split + second-class samples right of it.
    std::size_t correct = static_cast<std::size_t>(std::count(side.begin(), side.end(), kSecond));
    ThresholdResult best;
    bool have = false;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= n; ++p) {
        if (p > 0) {
            correct = side[order[p - 1]] == kFirst ? correct + 1 : correct - 1;
        }
        if (p > 0 && p < n && !(coord[order[p - 1]] < coord[order[p]])) {
            continue;
        }
        const double threshold =
            p == 0 ? -kInf : (p == n ? kInf : 0.5 * (coord[order[p - 1]] + coord[order[p]]));
        const std::size_t flipped = n - correct;
        const bool left = correct >= flipped;
        const double acc = static_cast<double>(left ? correct : flipped) / static_cast<double>(n);
        if (!have || acc > best.accuracy) {
            best = {p, threshold, acc, left};
            have = true;
        }
    }
    return best;
}

ThresholdResult first_component_sufficiency(const NetParams& params, const LabeledDataset& data, std::size_t i,
                                            std::size_t j) {
    const PairAnalysis pa = analyze_pair(params, data, i, j, 1);
    return best_threshold(pa.coords.coords.column(0), pa.coords.side);
}

} // namespace dbevo
