#pragma once

// Class-pair analyses in the PCA space of embedding features: joint pair
// matrices, PCA with sign stabilization, class centers and their trajectories,
// the nearest-neighbor inverse map back to the embedding space, probability
// heat maps, boundary "resistors", decision-space probabilities and PCA(3)
// exports for class triples.

#include "dbevo/linalg.hpp"
#include "dbevo/mlp.hpp"
#include "dbevo/synthdata.hpp"
#include "dbevo/train.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dbevo {

inline constexpr std::uint8_t kFirst = 0;
inline constexpr std::uint8_t kSecond = 1;

/// Rows of classes i and j in source order. side[r] is kFirst for class i.
struct PairSelection {
    Matrix features;
    std::vector<std::uint8_t> side;
    std::vector<std::size_t> source_rows;
    std::size_t first_class = 0;
    std::size_t second_class = 0;
};

/// Throws EmptyPair when i == j and EmptyClass when either class has no rows.
PairSelection pair_matrix(const Matrix& features, std::span<const std::uint32_t> labels, std::size_t i,
                          std::size_t j);

struct PCAModel {
    std::vector<double> mean;
    Matrix components;                  // d×k, orthonormal columns
    std::vector<double> singular_values; // of the centered matrix, descending, k values
    std::vector<bool> sign_flips;        // toggled each time a component is negated
    std::size_t num_samples = 0;

    std::size_t k() const noexcept { return components.cols(); }
    /// s_i² / (n - 1).
    std::vector<double> explained_variances() const;
};

/// Requires n >= 2 and k <= min(n - 1, d); throws TooFewSamples otherwise.
PCAModel pca_fit(const Matrix& phi, std::size_t k);
/// (phi - mean) · components.
Matrix project(const PCAModel& model, const Matrix& phi);

struct PairCoords {
    Matrix coords;                       // n×k
    std::vector<std::uint8_t> side;
    std::array<std::string, 2> names;    // first = left-convention class

    std::size_t count(std::uint8_t which) const;
};

struct ClassCenters {
    std::vector<double> first;
    std::vector<double> second;
};

/// Throws EmptyClass when either side has no rows.
ClassCenters class_centers(const PairCoords& coords);

/// Negates every component on which the first class's center lies to the right
/// of the second's, in both the model and the coordinates.
std::pair<PCAModel, PairCoords> stabilize_signs(PCAModel model, PairCoords coords);

/// Everything derived from one class pair at one checkpoint.
struct PairAnalysis {
    PairSelection selection;   // embedding rows of the pair
    PCAModel pca;              // sign-stabilized
    PairCoords coords;
};

PairAnalysis analyze_pair(const Matrix& embeddings, std::span<const std::uint32_t> labels, std::size_t i,
                          std::size_t j, std::size_t k, std::array<std::string, 2> names = {});
PairAnalysis analyze_pair(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j,
                          std::size_t k = 2);

struct TrajectoryPoint {
    std::uint64_t epoch = 0;
    double train_accuracy = 0.0;
    ClassCenters centers;
    std::vector<double> variances;  // up to three largest explained variances
};

/// One point per milestone: PCA(2) refit from scratch, signs stabilized.
std::vector<TrajectoryPoint> center_trajectory(const RunArchive& run, std::size_t i, std::size_t j,
                                               const LabeledDataset& data);

/// Indices of the `count` rows of `coords` nearest to x (Euclidean), ordered by
/// distance with ties going to the lower index.
std::vector<std::size_t> nearest_neighbors(const Matrix& coords, std::span<const double> x, std::size_t count);

/// psi(x): mean of the original embedding rows of the `neighbors` training
/// samples closest to x in PCA coordinates. Throws EmptyTrainingSet on empty
/// input and InvalidArgument unless 1 <= neighbors <= n.
std::vector<double> inverse_map(const PairCoords& train_coords, const Matrix& phi_train, std::span<const double> x,
                                std::size_t neighbors);

inline constexpr std::size_t kDefaultNeighbors = 10;

struct GridSpec {
    std::size_t resolution = 100;
    double margin = 0.1;  // fraction of the data range added on each side
};

/// values(r, c) is the first-class probability at the center of cell (r, c):
/// x = x_min + (c + 1/2) (x_max - x_min) / R, y likewise with r.
struct HeatmapGrid {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    std::size_t resolution = 0;
    Matrix values;

    double cell_x(std::size_t c) const;
    double cell_y(std::size_t r) const;
};

/// First-class probability at PCA point x: the pair classifier applied to psi(x).
double boundary_probability(const PairAnalysis& pair, const ClassifierHead& head, std::span<const double> x,
                            std::size_t neighbors);

/// Bounds are the bounding box of the pair coordinates expanded by
/// margin × range per side (a zero range is widened to ±0.5).
HeatmapGrid heatmap(const PairAnalysis& pair, const ClassifierHead& head, const GridSpec& grid,
                    std::size_t neighbors);
HeatmapGrid heatmap(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j,
                    const GridSpec& grid, std::size_t neighbors);

struct ResistorSet {
    std::uint8_t side = kFirst;
    std::size_t universe = 0;           // rows in the pair matrix the indices refer to
    std::vector<std::size_t> indices;   // into the pair matrix
    std::vector<double> distances;      // ascending
};

inline constexpr double kDefaultResistorFraction = 0.05;

/// For each side, the ceil(fraction × class size) samples closest to the other
/// class's center. Requires 0 < fraction <= 1.
std::pair<ResistorSet, ResistorSet> resistors(const PairCoords& coords, double fraction);

/// Jaccard index of two resistor sets. Throws MismatchedUniverse when they
/// describe different classes or pair matrices.
double resistor_overlap(const ResistorSet& a, const ResistorSet& b);

struct DecisionSpace {
    Matrix pair_probs;                 // n×2: full-softmax probability of class i and of class j
    Matrix full;                       // n×C full softmax
    std::vector<std::uint8_t> side;
    std::vector<std::size_t> source_rows;
};

DecisionSpace decision_space(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j);

struct TripleExport {
    Matrix coords;                     // n×3, centered
    std::vector<std::uint32_t> labels; // original class ids
    std::vector<std::size_t> source_rows;
    std::vector<double> variances;     // descending
};

/// Throws EmptyClass if any of the three classes is absent and InvalidArgument
/// for repeated classes or d < 3.
TripleExport pca3_export(const Matrix& features, std::span<const std::uint32_t> labels,
                         std::array<std::size_t, 3> triple);

} // namespace dbevo
