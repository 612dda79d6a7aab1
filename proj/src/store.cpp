#include "dbevo/store.hpp"

#include "dbevo/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dbevo {

namespace {

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string svg_num(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
    if (text == "nan") {
        return std::nan("");
    }
    if (text == "inf") {
        return HUGE_VAL;
    }
    if (text == "-inf") {
        return -HUGE_VAL;
    }
    double x = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        fail(Errc::InvalidArgument, "not a number: '" + std::string(text) + "'");
    }
    return x;
}

std::string to_csv(const CsvRow& header, const std::vector<CsvRow>& rows) {
    std::string out;
    auto emit = [&](const CsvRow& row) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) {
                out += ',';
            }
            const std::string& cell = row[k];
            if (cell.find_first_of(",\"\n\r") == std::string::npos) {
                out += cell;
                continue;
            }
            out += '"';
            for (char ch : cell) {
                if (ch == '"') {
                    out += '"';
                }
                out += ch;
            }
            out += '"';
        }
        out += '\n';
    };
    emit(header);
    for (const auto& r : rows) {
        emit(r);
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

std::vector<CsvRow> parse_simple_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        CsvRow row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            row.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
    std::vector<CsvRow> rows;
    for (std::size_t m = 0; m < points.size(); ++m) {
        const auto& p = points[m];
        auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? num(v[k]) : ""; };
        rows.push_back({num(m), num(p.train_accuracy), at(p.centers.first, 0), at(p.centers.first, 1),
                        at(p.centers.second, 0), at(p.centers.second, 1), at(p.variances, 0), at(p.variances, 1),
                        at(p.variances, 2), num(static_cast<std::size_t>(p.epoch))});
    }
    return to_csv({"milestone_id", "train_acc", "c1x", "c1y", "c2x", "c2y", "var1", "var2", "var3", "epoch"}, rows);
}

std::string variance_csv(const std::vector<VariancePoint>& points) {
    std::size_t m = 0;
    for (const auto& p : points) {
        m = std::max(m, p.variances.size());
    }
    CsvRow header{"milestone_id", "epoch", "train_acc"};
    for (std::size_t k = 0; k < m; ++k) {
        header.push_back("var" + std::to_string(k + 1));
    }
    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        CsvRow row{num(i), num(static_cast<std::size_t>(points[i].epoch)), num(points[i].train_accuracy)};
        for (double v : points[i].variances) {
            row.push_back(num(v));
        }
        rows.push_back(std::move(row));
    }
    return to_csv(header, rows);
}

std::string metrics_csv(const std::vector<EpochLog>& log, std::size_t num_classes) {
    CsvRow header{"epoch", "lr", "train_loss", "train_acc"};
    for (std::size_t c = 0; c < num_classes; ++c) {
        header.push_back("recall_" + std::to_string(c));
    }
    std::vector<CsvRow> rows;
    for (const auto& e : log) {
        CsvRow row{num(static_cast<std::size_t>(e.epoch)), num(e.lr), num(e.train_loss), num(e.train_accuracy)};
        for (double r : e.recall) {
            row.push_back(num(r));
        }
        rows.push_back(std::move(row));
    }
    return to_csv(header, rows);
}

std::string heatmap_csv(const HeatmapGrid& grid) {
    std::string out;
    for (std::size_t r = 0; r < grid.values.rows(); ++r) {
        for (std::size_t c = 0; c < grid.values.cols(); ++c) {
            if (c) {
                out += ',';
            }
            out += num(grid.values(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string heatmap_bounds_csv(const HeatmapGrid& grid) {
    return to_csv({"x_min", "x_max", "y_min", "y_max", "resolution"},
                  {{num(grid.x_min), num(grid.x_max), num(grid.y_min), num(grid.y_max), num(grid.resolution)}});
}

std::string resistor_csv(const ResistorSet& first, const ResistorSet& second, const PairSelection& selection) {
    std::vector<CsvRow> rows;
    for (const auto* set : {&first, &second}) {
        const std::size_t cls = set->side == kFirst ? selection.first_class : selection.second_class;
        for (std::size_t k = 0; k < set->indices.size(); ++k) {
            const std::size_t idx = set->indices[k];
            rows.push_back({num(cls), num(k), num(idx), num(selection.source_rows.at(idx)), num(set->distances[k])});
        }
    }
    return to_csv({"class", "rank", "pair_index", "source_row", "distance"}, rows);
}

std::string decision_space_csv(const DecisionSpace& ds) {
    std::vector<CsvRow> rows;
    for (std::size_t r = 0; r < ds.pair_probs.rows(); ++r) {
        rows.push_back({num(r), num(ds.source_rows[r]), num(static_cast<std::size_t>(ds.side[r])),
                        num(ds.pair_probs(r, 0)), num(ds.pair_probs(r, 1))});
    }
    return to_csv({"pair_index", "source_row", "side", "p_first", "p_second"}, rows);
}

std::string triple_csv(const TripleExport& t) {
    std::vector<CsvRow> rows;
    for (std::size_t r = 0; r < t.coords.rows(); ++r) {
        rows.push_back({num(t.source_rows[r]), num(static_cast<std::size_t>(t.labels[r])), num(t.coords(r, 0)),
                        num(t.coords(r, 1)), num(t.coords(r, 2))});
    }
    return to_csv({"source_row", "label", "pc1", "pc2", "pc3"}, rows);
}

std::string spectrum_csv(const SpectrumReport& s) {
    std::vector<CsvRow> rows;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        rows.push_back({num(k), num(s.values[k])});
    }
    return to_csv({"index", "value"}, rows);
}

std::string profile_csv(const std::vector<ProfileRow>& rows, const std::vector<std::string>& spectrum_files) {
    std::vector<CsvRow> out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        out.push_back({r.name, num(r.train_accuracy), num(r.test_accuracy), num(r.spectrum.rank),
                       num(r.spectrum.sigma1()), num(r.spectrum.sigma2()), r.diverged ? "1" : "0",
                       k < spectrum_files.size() ? spectrum_files[k] : ""});
    }
    return to_csv({"optimizer", "train_acc", "test_acc", "rank", "sigma1", "sigma2", "diverged", "spectrum_file"},
                  out);
}

std::string render_svg_heatmap(const HeatmapGrid& grid, const PairCoords& coords) {
    const std::size_t r_count = grid.resolution;
    if (r_count == 0 || grid.values.rows() != r_count || grid.values.cols() != r_count) {
        fail(Errc::ShapeMismatch, "heat map values do not match its resolution");
    }
    constexpr double kLeft = 70.0;
    constexpr double kTop = 20.0;
    constexpr double kSize = 500.0;
    const double cell = kSize / static_cast<double>(r_count);
    const double w = grid.x_max - grid.x_min;
    const double h = grid.y_max - grid.y_min;

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(kLeft + kSize + 20) << "\" height=\""
       << svg_num(kTop + kSize + 50) << "\">\n<g class=\"grid\">\n";
    for (std::size_t r = 0; r < r_count; ++r) {
        for (std::size_t c = 0; c < r_count; ++c) {
            const double v = std::clamp(grid.values(r, c), 0.0, 1.0);
            const int g = static_cast<int>(std::lround(255.0 * v));
            // Row 0 holds the smallest y, drawn at the bottom.
            os << "<rect class=\"cell\" x=\"" << svg_num(kLeft + static_cast<double>(c) * cell) << "\" y=\""
               << svg_num(kTop + static_cast<double>(r_count - 1 - r) * cell) << "\" width=\"" << svg_num(cell)
               << "\" height=\"" << svg_num(cell) << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
        }
    }
    os << "</g>\n<g class=\"samples\">\n";
    if (coords.coords.cols() >= 2 && w > 0.0 && h > 0.0) {
        for (std::size_t r = 0; r < coords.coords.rows(); ++r) {
            const double px = kLeft + (coords.coords(r, 0) - grid.x_min) / w * kSize;
            const double py = kTop + (1.0 - (coords.coords(r, 1) - grid.y_min) / h) * kSize;
            const bool first = coords.side[r] == kFirst;
            os << "<circle class=\"" << (first ? "first" : "second") << "\" cx=\"" << svg_num(px) << "\" cy=\""
               << svg_num(py) << "\" r=\"2\" fill=\"" << (first ? "#1f77b4" : "#d62728") << "\"/>\n";
        }
    }
    os << "</g>\n<g class=\"axes\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect x=\"" << svg_num(kLeft) << "\" y=\"" << svg_num(kTop) << "\" width=\"" << svg_num(kSize)
       << "\" height=\"" << svg_num(kSize) << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double base = kTop + kSize;
    os << "<text x=\"" << svg_num(kLeft) << "\" y=\"" << svg_num(base + 16) << "\">" << xml_escape(num(grid.x_min))
       << "</text>\n"
       << "<text x=\"" << svg_num(kLeft + kSize) << "\" y=\"" << svg_num(base + 16) << "\" text-anchor=\"end\">"
       << xml_escape(num(grid.x_max)) << "</text>\n"
       << "<text x=\"" << svg_num(kLeft - 4) << "\" y=\"" << svg_num(base) << "\" text-anchor=\"end\">"
       << xml_escape(num(grid.y_min)) << "</text>\n"
       << "<text x=\"" << svg_num(kLeft - 4) << "\" y=\"" << svg_num(kTop + 12) << "\" text-anchor=\"end\">"
       << xml_escape(num(grid.y_max)) << "</text>\n"
       << "<text x=\"" << svg_num(kLeft + kSize / 2) << "\" y=\"" << svg_num(base + 36)
       << "\" text-anchor=\"middle\">PC1 (" << xml_escape(coords.names[0]) << " left, "
       << xml_escape(coords.names[1]) << " right)</text>\n"
       << "</g>\n</svg>\n";
    return os.str();
}

void emit_svg_heatmap(const std::filesystem::path& path, const HeatmapGrid& grid, const PairCoords& coords) {
    write_text(path, render_svg_heatmap(grid, coords));
}

FmxData to_fmx(const LabeledDataset& data) {
    FmxData f;
    f.features = data.features;
    f.labels = data.labels;
    f.num_classes = static_cast<std::uint32_t>(data.num_classes());
    f.class_names = data.class_names;
    return f;
}

LabeledDataset from_fmx(const FmxData& fmx) {
    if (!fmx.labeled()) {
        fail(Errc::InvalidArgument, "dataset file carries no labels");
    }
    LabeledDataset d;
    d.features = fmx.features;
    d.labels = fmx.labels;
    d.class_names = fmx.class_names;
    if (d.class_names.empty()) {
        for (std::uint32_t c = 0; c < fmx.num_classes; ++c) {
            d.class_names.push_back(std::to_string(c));
        }
    }
    return d;
}

} // namespace dbevo
