#include "dbevo/boundary.hpp"

#include "dbevo/error.hpp"
#include "dbevo/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dbevo {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

std::string class_label(const std::vector<std::string>& names, std::size_t c) {
    return c < names.size() ? names[c] : std::to_string(c);
}

// Indices of `count` candidates ordered by (key, index).
std::vector<std::size_t> smallest(const std::vector<double>& keys, const std::vector<std::size_t>& candidates,
                                  std::size_t count) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) {
            return keys[a] < keys[b];
        }
        return candidates[a] < candidates[b];
    };
    count = std::min(count, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), less);
    order.resize(count);
    return order;
}

} // namespace

PairSelection pair_matrix(const Matrix& features, std::span<const std::uint32_t> labels, std::size_t i,
                          std::size_t j) {
    if (i == j) {
        fail(Errc::EmptyPair, "pair needs two distinct classes, got " + std::to_string(i) + " twice");
    }
    if (labels.size() != features.rows()) {
        fail(Errc::ShapeMismatch, "label count does not match feature rows");
    }
    PairSelection sel;
    sel.first_class = i;
    sel.second_class = j;
    std::size_t n_first = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == i || labels[r] == j) {
            sel.source_rows.push_back(r);
            sel.side.push_back(labels[r] == i ? kFirst : kSecond);
            n_first += labels[r] == i ? 1 : 0;
        }
    }
    if (n_first == 0) {
        fail(Errc::EmptyClass, "class " + std::to_string(i) + " has no samples");
    }
    if (n_first == sel.source_rows.size()) {
        fail(Errc::EmptyClass, "class " + std::to_string(j) + " has no samples");
    }
    sel.features = Matrix(sel.source_rows.size(), features.cols());
    for (std::size_t r = 0; r < sel.source_rows.size(); ++r) {
        const auto src = features.row(sel.source_rows[r]);
        std::copy(src.begin(), src.end(), sel.features.row(r).begin());
    }
    return sel;
}

std::vector<double> PCAModel::explained_variances() const {
    std::vector<double> v;
    const double denom = static_cast<double>(num_samples) - 1.0;
    for (double s : singular_values) {
        v.push_back(s * s / denom);
    }
    return v;
}

PCAModel pca_fit(const Matrix& phi, std::size_t k) {
    const std::size_t n = phi.rows();
    const std::size_t d = phi.cols();
    if (k == 0) {
        fail(Errc::InvalidArgument, "PCA needs at least one component");
    }
    if (n < 2 || k > std::min(n - 1, d)) {
        fail(Errc::TooFewSamples, std::to_string(n) + " samples in " + std::to_string(d) +
                                      " dimensions cannot support " + std::to_string(k) + " components");
    }
    PCAModel m;
    m.num_samples = n;
    m.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = phi.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            m.mean[c] += row[c];
        }
    }
    for (auto& x : m.mean) {
        x /= static_cast<double>(n);
    }
    Matrix centered = phi;
    for (std::size_t r = 0; r < n; ++r) {
        auto row = centered.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            row[c] -= m.mean[c];
        }
    }
    const SvdResult s = svd(centered);
    m.components = Matrix(d, k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t r = 0; r < d; ++r) {
            m.components(r, c) = s.v(r, c);
        }
        m.singular_values.push_back(s.s[c]);
    }
    m.sign_flips.assign(k, false);
    return m;
}

Matrix project(const PCAModel& model, const Matrix& phi) {
    const std::size_t d = model.mean.size();
    if (phi.cols() != d) {
        fail(Errc::ShapeMismatch, "projecting " + std::to_string(phi.cols()) + "-column rows with a " +
                                      std::to_string(d) + "-dimensional PCA model");
    }
    const std::size_t k = model.k();
    Matrix out(phi.rows(), k);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < phi.rows(); ++r) {
        const auto row = phi.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            centered[c] = row[c] - model.mean[c];
        }
        for (std::size_t q = 0; q < k; ++q) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                s += centered[c] * model.components(c, q);
            }
            out(r, q) = s;
        }
    }
    return out;
}

std::size_t PairCoords::count(std::uint8_t which) const {
    return static_cast<std::size_t>(std::count(side.begin(), side.end(), which));
}

ClassCenters class_centers(const PairCoords& coords) {
    const std::size_t k = coords.coords.cols();
    if (coords.side.size() != coords.coords.rows()) {
        fail(Errc::ShapeMismatch, "side labels do not match coordinate rows");
    }
    ClassCenters out;
    out.first.assign(k, 0.0);
    out.second.assign(k, 0.0);
    std::size_t n_first = 0;
    std::size_t n_second = 0;
    for (std::size_t r = 0; r < coords.coords.rows(); ++r) {
        const auto row = coords.coords.row(r);
        auto& target = coords.side[r] == kFirst ? out.first : out.second;
        (coords.side[r] == kFirst ? n_first : n_second) += 1;
        for (std::size_t q = 0; q < k; ++q) {
            target[q] += row[q];
        }
    }
    if (n_first == 0 || n_second == 0) {
        fail(Errc::EmptyClass, "both pair classes need at least one sample");
    }
    for (std::size_t q = 0; q < k; ++q) {
        out.first[q] /= static_cast<double>(n_first);
        out.second[q] /= static_cast<double>(n_second);
    }
    return out;
}

std::pair<PCAModel, PairCoords> stabilize_signs(PCAModel model, PairCoords coords) {
    const ClassCenters centers = class_centers(coords);
    for (std::size_t q = 0; q < coords.coords.cols(); ++q) {
        if (centers.first[q] <= centers.second[q]) {
            continue;
        }
        for (std::size_t r = 0; r < coords.coords.rows(); ++r) {
            coords.coords(r, q) = -coords.coords(r, q);
        }
        if (q < model.k()) {
            for (std::size_t r = 0; r < model.components.rows(); ++r) {
                model.components(r, q) = -model.components(r, q);
            }
            model.sign_flips[q] = !model.sign_flips[q];
        }
    }
    return {std::move(model), std::move(coords)};
}

PairAnalysis analyze_pair(const Matrix& embeddings, std::span<const std::uint32_t> labels, std::size_t i,
                          std::size_t j, std::size_t k, std::array<std::string, 2> names) {
    PairAnalysis out;
    out.selection = pair_matrix(embeddings, labels, i, j);
    PCAModel model = pca_fit(out.selection.features, k);
    PairCoords coords;
    coords.coords = project(model, out.selection.features);
    coords.side = out.selection.side;
    coords.names = std::move(names);
    auto [m, c] = stabilize_signs(std::move(model), std::move(coords));
    out.pca = std::move(m);
    out.coords = std::move(c);
    return out;
}

PairAnalysis analyze_pair(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j,
                          std::size_t k) {
    const ForwardResult fr = forward(params, data.features);
    return analyze_pair(fr.embeddings, data.labels, i, j, k,
                        {class_label(data.class_names, i), class_label(data.class_names, j)});
}

std::vector<TrajectoryPoint> center_trajectory(const RunArchive& run, std::size_t i, std::size_t j,
                                               const LabeledDataset& data) {
    if (run.milestones.empty()) {
        fail(Errc::InvalidArgument, "run archive has no milestones");
    }
    std::vector<TrajectoryPoint> out;
    for (const auto& ms : run.milestones) {
        const PairAnalysis pa = analyze_pair(ms.params, data, i, j, 2);
        TrajectoryPoint p;
        p.epoch = ms.epoch;
        p.train_accuracy = ms.train_accuracy;
        p.centers = class_centers(pa.coords);
        const Matrix& phi = pa.selection.features;
        const std::size_t m = std::min<std::size_t>(3, std::min(phi.rows() - 1, phi.cols()));
        p.variances = explained_variances(phi, m);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::size_t> nearest_neighbors(const Matrix& coords, std::span<const double> x, std::size_t count) {
    if (x.size() != coords.cols()) {
        fail(Errc::ShapeMismatch, "query has " + std::to_string(x.size()) + " coordinates, expected " +
                                      std::to_string(coords.cols()));
    }
    std::vector<double> keys(coords.rows());
    std::vector<std::size_t> ids(coords.rows());
    for (std::size_t r = 0; r < coords.rows(); ++r) {
        keys[r] = squared_distance(coords.row(r), x);
        ids[r] = r;
    }
    return smallest(keys, ids, count);
}

std::vector<double> inverse_map(const PairCoords& train_coords, const Matrix& phi_train, std::span<const double> x,
                                std::size_t neighbors) {
    const std::size_t n = train_coords.coords.rows();
    if (n == 0) {
        fail(Errc::EmptyTrainingSet, "inverse map needs training samples");
    }
    if (phi_train.rows() != n) {
        fail(Errc::ShapeMismatch, "coordinates and embeddings have different row counts");
    }
    if (neighbors == 0 || neighbors > n) {
        fail(Errc::InvalidArgument, "neighbors must be in [1, " + std::to_string(n) + "], got " +
                                        std::to_string(neighbors));
    }
    const auto nn = nearest_neighbors(train_coords.coords, x, neighbors);
    std::vector<double> psi(phi_train.cols(), 0.0);
    for (auto r : nn) {
        const auto row = phi_train.row(r);
        for (std::size_t c = 0; c < psi.size(); ++c) {
            psi[c] += row[c];
        }
    }
    for (auto& v : psi) {
        v /= static_cast<double>(neighbors);
    }
    return psi;
}

double HeatmapGrid::cell_x(std::size_t c) const {
    return x_min + (static_cast<double>(c) + 0.5) * (x_max - x_min) / static_cast<double>(resolution);
}

double HeatmapGrid::cell_y(std::size_t r) const {
    return y_min + (static_cast<double>(r) + 0.5) * (y_max - y_min) / static_cast<double>(resolution);
}

double boundary_probability(const PairAnalysis& pair, const ClassifierHead& head, std::span<const double> x,
                            std::size_t neighbors) {
    const auto psi = inverse_map(pair.coords, pair.selection.features, x, neighbors);
    return pair_probability(head, psi, pair.selection.first_class, pair.selection.second_class);
}

HeatmapGrid heatmap(const PairAnalysis& pair, const ClassifierHead& head, const GridSpec& grid,
                    std::size_t neighbors) {
    if (grid.resolution < 2) {
        fail(Errc::InvalidArgument, "heat map resolution must be at least 2");
    }
    if (!(grid.margin >= 0.0) || !std::isfinite(grid.margin)) {
        fail(Errc::InvalidArgument, "heat map margin must be a finite non-negative fraction");
    }
    const Matrix& xy = pair.coords.coords;
    if (xy.cols() != 2) {
        fail(Errc::ShapeMismatch, "heat maps need two PCA components");
    }
    auto bounds = [&](std::size_t q) {
        double lo = xy(0, q);
        double hi = lo;
        for (std::size_t r = 1; r < xy.rows(); ++r) {
            lo = std::min(lo, xy(r, q));
            hi = std::max(hi, xy(r, q));
        }
        const double range = hi - lo;
        if (range <= 0.0) {
            return std::pair{lo - 0.5, hi + 0.5};
        }
        return std::pair{lo - grid.margin * range, hi + grid.margin * range};
    };
    HeatmapGrid g;
    std::tie(g.x_min, g.x_max) = bounds(0);
    std::tie(g.y_min, g.y_max) = bounds(1);
    g.resolution = grid.resolution;
    g.values = Matrix(grid.resolution, grid.resolution);
    for (std::size_t r = 0; r < grid.resolution; ++r) {
        for (std::size_t c = 0; c < grid.resolution; ++c) {
            const std::array<double, 2> x{g.cell_x(c), g.cell_y(r)};
            g.values(r, c) = boundary_probability(pair, head, x, neighbors);
        }
    }
    return g;
}

HeatmapGrid heatmap(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j,
                    const GridSpec& grid, std::size_t neighbors) {
    const PairAnalysis pa = analyze_pair(params, data, i, j, 2);
    return heatmap(pa, params.head, grid, neighbors);
}

std::pair<ResistorSet, ResistorSet> resistors(const PairCoords& coords, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        fail(Errc::InvalidArgument, "resistor fraction must be in (0, 1]");
    }
    const ClassCenters centers = class_centers(coords);
    auto pick = [&](std::uint8_t side, const std::vector<double>& other_center) {
        std::vector<std::size_t> members;
        std::vector<double> dist;
        for (std::size_t r = 0; r < coords.coords.rows(); ++r) {
            if (coords.side[r] == side) {
                members.push_back(r);
                dist.push_back(std::sqrt(squared_distance(coords.coords.row(r), other_center)));
            }
        }
        const auto count = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(members.size()) - 1e-9));
        ResistorSet set;
        set.side = side;
        set.universe = coords.coords.rows();
        for (auto k : smallest(dist, members, count)) {
            set.indices.push_back(members[k]);
            set.distances.push_back(dist[k]);
        }
        return set;
    };
    return {pick(kFirst, centers.second), pick(kSecond, centers.first)};
}

double resistor_overlap(const ResistorSet& a, const ResistorSet& b) {
    if (a.side != b.side || a.universe != b.universe) {
        fail(Errc::MismatchedUniverse, "resistor sets describe different classes or pair matrices");
    }
    const std::set<std::size_t> sa(a.indices.begin(), a.indices.end());
    const std::set<std::size_t> sb(b.indices.begin(), b.indices.end());
    std::size_t common = 0;
    for (auto x : sa) {
        common += sb.count(x);
    }
    const std::size_t uni = sa.size() + sb.size() - common;
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(common) / static_cast<double>(uni);
}

DecisionSpace decision_space(const NetParams& params, const LabeledDataset& data, std::size_t i, std::size_t j) {
    const std::size_t c = params.config.num_classes;
    if (i >= c || j >= c) {
        fail(Errc::BadClass, "pair class out of range for a " + std::to_string(c) + "-class model");
    }
    const ForwardResult fr = forward(params, data.features);
    const Matrix probs = full_softmax(fr.logits);
    const PairSelection sel = pair_matrix(probs, data.labels, i, j);
    DecisionSpace out;
    out.full = sel.features;
    out.side = sel.side;
    out.source_rows = sel.source_rows;
    out.pair_probs = Matrix(sel.features.rows(), 2);
    for (std::size_t r = 0; r < sel.features.rows(); ++r) {
        out.pair_probs(r, 0) = sel.features(r, i);
        out.pair_probs(r, 1) = sel.features(r, j);
    }
    return out;
}

TripleExport pca3_export(const Matrix& features, std::span<const std::uint32_t> labels,
                         std::array<std::size_t, 3> triple) {
    if (triple[0] == triple[1] || triple[0] == triple[2] || triple[1] == triple[2]) {
        fail(Errc::InvalidArgument, "triple needs three distinct classes");
    }
    if (features.cols() < 3) {
        fail(Errc::InvalidArgument, "PCA(3) needs at least 3 feature dimensions");
    }
    if (labels.size() != features.rows()) {
        fail(Errc::ShapeMismatch, "label count does not match feature rows");
    }
    TripleExport out;
    std::array<std::size_t, 3> counts{};
    for (std::size_t r = 0; r < labels.size(); ++r) {
        for (std::size_t t = 0; t < 3; ++t) {
            if (labels[r] == triple[t]) {
                out.source_rows.push_back(r);
                out.labels.push_back(labels[r]);
                ++counts[t];
            }
        }
    }
    for (std::size_t t = 0; t < 3; ++t) {
        if (counts[t] == 0) {
            fail(Errc::EmptyClass, "class " + std::to_string(triple[t]) + " has no samples");
        }
    }
    Matrix phi(out.source_rows.size(), features.cols());
    for (std::size_t r = 0; r < out.source_rows.size(); ++r) {
        const auto src = features.row(out.source_rows[r]);
        std::copy(src.begin(), src.end(), phi.row(r).begin());
    }
    const PCAModel model = pca_fit(phi, 3);
    out.coords = project(model, phi);
    out.variances = model.explained_variances();
    return out;
}

} // namespace dbevo
