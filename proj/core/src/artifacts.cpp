#include "hiermap/artifacts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "hiermap/errors.hpp"

namespace hiermap {

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        double v = 0.0;
        const std::string& s = row.at(c);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc()) {
            if (s == "inf") {
                v = std::numeric_limits<double>::infinity();
            } else if (s == "nan") {
                v = std::numeric_limits<double>::quiet_NaN();
            } else {
                throw IoError("CSV column '" + name + "' has non-numeric entry '" + s + "'");
            }
        }
        out.push_back(v);
    }
    return out;
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out.push_back(',');
            out += fields[i];
        }
        out.push_back('\n');
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != table.header.size()) {
                throw IoError("ragged CSV row in '" + path.string() + "'");
            }
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) throw IoError("SHA-256 computation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    return sha256_hex(read_text_file(path));
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-2)) {
        std::snprintf(buf, sizeof(buf), "%.0e", v);
    } else {
        std::snprintf(buf, sizeof(buf), "%.3g", v);
    }
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;
    double pixel_lo = 0.0;
    double pixel_hi = 1.0;

    double map(double v) const {
        const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
        return pixel_lo + t * (pixel_hi - pixel_lo);
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            const double step = std::max(1.0, std::ceil((hi - lo) / 8.0));
            for (double e = std::ceil(lo); e <= hi + 1e-9; e += step) out.push_back(std::pow(10.0, e));
            return out;
        }
        const double span = hi - lo;
        const double raw = span / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (const double m : {1.0, 2.0, 5.0, 10.0}) {
            step = m * mag;
            if (span / step <= 7.0) break;
        }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
            out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
        }
        return out;
    }
};

Axis make_axis(std::vector<double> values, bool log, double pixel_lo, double pixel_hi) {
    Axis a;
    a.log = log;
    a.pixel_lo = pixel_lo;
    a.pixel_hi = pixel_hi;
    std::vector<double> usable;
    for (const double v : values) {
        if (std::isfinite(v) && (!log || v > 0.0)) usable.push_back(log ? std::log10(v) : v);
    }
    if (usable.empty()) {
        a.lo = 0.0;
        a.hi = 1.0;
        return a;
    }
    a.lo = *std::min_element(usable.begin(), usable.end());
    a.hi = *std::max_element(usable.begin(), usable.end());
    if (a.hi - a.lo < 1e-12) {
        a.lo -= 0.5;
        a.hi += 0.5;
    } else if (!log) {
        const double pad = 0.05 * (a.hi - a.lo);
        a.lo -= pad;
        a.hi += pad;
    }
    return a;
}

void frame(std::ostringstream& os, const std::string& title, const std::string& xl,
           const std::string& yl, const Axis& x, const Axis& y) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
       << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const double t : x.ticks()) {
        const double px = x.map(t);
        os << "<line x1=\"" << num(px) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px) << "\" y2=\""
           << num(y0 + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px) << "\" y=\"" << num(y0 + 18) << "\" text-anchor=\"middle\">"
           << tick_label(t) << "</text>\n";
    }
    for (const double t : y.ticks()) {
        const double py = y.map(t);
        os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(py) << "\" x2=\"" << num(x0) << "\" y2=\""
           << num(py) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">"
           << tick_label(t) << "</text>\n";
    }
    os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 15)
       << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
    os << "<text x=\"18\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << num((y0 + y1) / 2) << ")\">" << escape(yl) << "</text>\n";
}

void draw_series(std::ostringstream& os, const PlotSeries& s, const Axis& x, const Axis& y,
                 const char* colour, std::size_t legend_slot) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        const double xv = s.x[i];
        const double yv = s.y[i];
        if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
        if ((x.log && xv <= 0.0) || (y.log && yv <= 0.0)) continue;
        pts.emplace_back(x.map(xv), y.map(yv));
    }
    if (s.lines && pts.size() > 1) {
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [px, py] : pts) os << num(px) << ',' << num(py) << ' ';
        os << "\"/>\n";
    }
    if (s.markers) {
        for (const auto& [px, py] : pts) {
            os << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"2.2\" fill=\"" << colour
               << "\"/>\n";
        }
    }
    if (!s.label.empty()) {
        const double lx = kWidth - kRight + 12;
        const double ly = kTop + 14 + 16 * static_cast<double>(legend_slot);
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
           << colour << "\"/>\n";
        os << "<text x=\"" << num(lx + 15) << "\" y=\"" << num(ly + 1) << "\">" << escape(s.label)
           << "</text>\n";
    }
}

std::string heat_colour(double t) {
    // Dark blue -> teal -> yellow.
    t = std::clamp(t, 0.0, 1.0);
    const double r = t < 0.5 ? 20 + 2 * t * 20 : 60 + (t - 0.5) * 2 * 190;
    const double g = t < 0.5 ? 30 + 2 * t * 130 : 160 + (t - 0.5) * 2 * 80;
    const double b = t < 0.5 ? 110 + 2 * t * 40 : 150 - (t - 0.5) * 2 * 120;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(r), static_cast<int>(g),
                  static_cast<int>(b));
    return buf;
}

}  // namespace

std::string render_line_plot(const LinePlot& plot) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& s : plot.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const Axis x = make_axis(xs, plot.log_x, kLeft, kWidth - kRight);
    const Axis y = make_axis(ys, plot.log_y, kHeight - kBottom, kTop);
    std::ostringstream os;
    frame(os, plot.title, plot.x_label, plot.y_label, x, y);
    for (std::size_t i = 0; i < plot.series.size(); ++i) {
        draw_series(os, plot.series[i], x, y, kPalette[i % kPalette.size()], i);
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_heat_map(const HeatMap& map) {
    if (map.values.size() != map.x.size() * map.y.size()) {
        throw DomainError("heat map values do not match the axes");
    }
    const double hx = map.x.size() > 1 ? map.x[1] - map.x[0] : 1.0;
    const double hy = map.y.size() > 1 ? map.y[1] - map.y[0] : 1.0;
    Axis x;
    x.lo = map.x.empty() ? 0.0 : map.x.front() - 0.5 * hx;
    x.hi = map.x.empty() ? 1.0 : map.x.back() + 0.5 * hx;
    x.pixel_lo = kLeft;
    x.pixel_hi = kWidth - kRight;
    Axis y;
    y.lo = map.y.empty() ? 0.0 : map.y.front() - 0.5 * hy;
    y.hi = map.y.empty() ? 1.0 : map.y.back() + 0.5 * hy;
    y.pixel_lo = kHeight - kBottom;
    y.pixel_hi = kTop;

    // Colour scale from the minimum to the 90th percentile, clipped above.
    std::vector<double> finite;
    for (const double v : map.values) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    double lo = 0.0;
    double hi = 1.0;
    if (!finite.empty()) {
        std::sort(finite.begin(), finite.end());
        lo = finite.front();
        hi = finite[static_cast<std::size_t>(0.9 * static_cast<double>(finite.size() - 1))];
        if (hi <= lo) hi = lo + 1.0;
    }
    auto scale = [&](double v) {
        if (map.log_color) return std::log1p(v - lo) / std::log1p(hi - lo);
        return (v - lo) / (hi - lo);
    };

    std::ostringstream os;
    frame(os, map.title, map.x_label, map.y_label, x, y);
    const double cw = std::abs(x.map(map.x.empty() ? 0.0 : map.x.front() + hx) - x.map(map.x.empty() ? 0.0 : map.x.front()));
    const double ch = std::abs(y.map(map.y.empty() ? 0.0 : map.y.front() + hy) - y.map(map.y.empty() ? 0.0 : map.y.front()));
    for (std::size_t iy = 0; iy < map.y.size(); ++iy) {
        for (std::size_t ix = 0; ix < map.x.size(); ++ix) {
            const double v = map.values[iy * map.x.size() + ix];
            const std::string colour = std::isfinite(v) ? heat_colour(scale(v)) : std::string("#ffffff");
            os << "<rect x=\"" << num(x.map(map.x[ix]) - 0.5 * cw) << "\" y=\"" << num(y.map(map.y[iy]) - 0.5 * ch)
               << "\" width=\"" << num(cw + 0.3) << "\" height=\"" << num(ch + 0.3) << "\" fill=\"" << colour
               << "\"/>\n";
        }
    }
    for (std::size_t i = 0; i < map.overlays.size(); ++i) {
        static constexpr std::array<const char*, 3> kOverlay = {"#ffffff", "#000000", "#00c853"};
        draw_series(os, map.overlays[i], x, y, kOverlay[i % kOverlay.size()], i);
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace hiermap
