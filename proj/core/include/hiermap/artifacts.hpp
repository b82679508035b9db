#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace hiermap {

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Write text to path, creating parent directories. Throws IoError with the path.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws IoError if absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

/// Plain comma-separated values (no quoting; fields never contain commas).
std::string to_csv(const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip formatting of a double.
std::string format_double(double v);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool lines = true;
    bool markers = true;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

/// Self-contained SVG (fixed 640x440 canvas). Nonpositive values are dropped
/// on log axes. An empty plot still draws its axes.
std::string render_line_plot(const LinePlot& plot);

struct HeatMap {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;                 // column centres
    std::vector<double> y;                 // row centres
    std::vector<double> values;            // row-major: values[iy * x.size() + ix]
    std::vector<PlotSeries> overlays;      // drawn as points/lines on top
    bool log_color = false;
};

std::string render_heat_map(const HeatMap& map);

}  // namespace hiermap
