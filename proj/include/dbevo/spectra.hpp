#pragma once

// Spectra of class-pair feature matrices: the auto-correlation matrix and its
// eigenvalues, numerical rank, explained variances, and the optimizer profile.
//
// Two definitions live side by side. The auto-correlation spectrum uses the
// uncentered matrix; explained variances use the centered one.

#include "dbevo/linalg.hpp"
#include "dbevo/mlp.hpp"
#include "dbevo/synthdata.hpp"
#include "dbevo/train.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dbevo {

/// A = phiᵀ phi (uncentered), exactly symmetric.
Matrix autocorrelation(const Matrix& phi);

struct SpectrumReport {
    std::array<std::size_t, 2> pair{};  // set by pair-aware callers
    std::vector<double> values;         // eigenvalues of A, descending, clamped at 0
    std::size_t rank = 0;
    std::size_t n = 0;
    std::size_t d = 0;

    double sigma1() const { return values.empty() ? 0.0 : values[0]; }
    double sigma2() const { return values.size() < 2 ? 0.0 : values[1]; }
};

SpectrumReport acm_spectrum(const Matrix& phi);

/// Top-m explained variances s_i² / (n - 1) of the centered matrix. Requires
/// m <= min(n - 1, d); throws TooFewSamples otherwise.
std::vector<double> explained_variances(const Matrix& phi, std::size_t m);

struct VariancePoint {
    std::uint64_t epoch = 0;
    double train_accuracy = 0.0;
    std::vector<double> variances;
};

std::vector<VariancePoint> variance_evolution(const RunArchive& run, std::size_t i, std::size_t j,
                                              const LabeledDataset& data, std::size_t m = 3);

struct ProfileRow {
    std::string name;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    bool diverged = false;
    SpectrumReport spectrum;  // hard pair, final checkpoint, training samples
};

/// One row per run from its final milestone, sorted by test accuracy
/// (descending, stable).
std::vector<ProfileRow> optimizer_profile(const std::vector<RunArchive>& runs, std::size_t i, std::size_t j,
                                          const LabeledDataset& train_set, const LabeledDataset& test_set);

struct ThresholdResult {
    std::size_t position = 0;   // samples left of the threshold, in sorted order
    double threshold = 0.0;     // midpoint between neighbors; ±inf at the ends
    double accuracy = 0.0;
    bool first_on_left = true;
};

/// Best 1-D split over all n+1 positions between sorted coordinates. Positions
/// inside a run of equal values are skipped. Ties go to the lower position and
/// to the first-on-left orientation.
ThresholdResult best_threshold(std::span<const double> coord, std::span<const std::uint8_t> side);

/// best_threshold on the first sign-stabilized PCA component of the pair.
ThresholdResult first_component_sufficiency(const NetParams& params, const LabeledDataset& data, std::size_t i,
                                            std::size_t j);

} // namespace dbevo
