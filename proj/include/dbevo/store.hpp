#pragma once

// CSV and SVG emitters for analysis results, plus dataset <-> FMX conversion.
// CSV numbers use '.' and 17 significant digits regardless of locale.

#include "dbevo/boundary.hpp"
#include "dbevo/fmx.hpp"
#include "dbevo/spectra.hpp"
#include "dbevo/synthdata.hpp"
#include "dbevo/train.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dbevo {

/// Shortest text that round-trips at 17 significant digits; "inf", "-inf", "nan".
std::string format_number(double x);
/// Inverse of format_number. Throws InvalidArgument on malformed text.
double parse_number(std::string_view text);

using CsvRow = std::vector<std::string>;

/// RFC 4180 quoting for cells containing ',', '"' or newlines.
std::string to_csv(const CsvRow& header, const std::vector<CsvRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Splits unquoted CSV (as written by this library for numeric tables).
std::vector<CsvRow> parse_simple_csv(const std::string& text);

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points);
std::string variance_csv(const std::vector<VariancePoint>& points);
std::string metrics_csv(const std::vector<EpochLog>& log, std::size_t num_classes);
/// One line per grid row (increasing y), R values each.
std::string heatmap_csv(const HeatmapGrid& grid);
std::string heatmap_bounds_csv(const HeatmapGrid& grid);
std::string resistor_csv(const ResistorSet& first, const ResistorSet& second, const PairSelection& selection);
std::string decision_space_csv(const DecisionSpace& ds);
std::string triple_csv(const TripleExport& t);
std::string spectrum_csv(const SpectrumReport& s);
/// `spectrum_files[k]` names the spectrum CSV written for rows[k].
std::string profile_csv(const std::vector<ProfileRow>& rows, const std::vector<std::string>& spectrum_files);

/// Standalone SVG: R×R grayscale cells (0 dark, 1 light) with the pair samples
/// drawn on top in two colors and the bounds printed on the axes.
std::string render_svg_heatmap(const HeatmapGrid& grid, const PairCoords& coords);
void emit_svg_heatmap(const std::filesystem::path& path, const HeatmapGrid& grid, const PairCoords& coords);

FmxData to_fmx(const LabeledDataset& data);
/// Requires labeled data. Missing class names become "0", "1", ...
LabeledDataset from_fmx(const FmxData& fmx);

} // namespace dbevo
