#include "hiermap/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hiermap/errors.hpp"

namespace hiermap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string format_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(v);
        return os.str();
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class LineParser {
public:
    LineParser(std::string_view text, std::string where) : text_(text), where_(std::move(where)) {}

    ConfigValue value() {
        skip_space();
        if (pos_ >= text_.size()) fail("missing value");
        const char c = text_[pos_];
        if (c == '"') return {string_literal()};
        if (c == '[') return {array()};
        return scalar();
    }

    void expect_end() {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] != '#') fail("unexpected trailing text");
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(where_ + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string string_literal() {
        ++pos_;
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                const char e = text_[++pos_];
                out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
            } else {
                out.push_back(text_[pos_]);
            }
            ++pos_;
        }
        if (pos_ >= text_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    ConfigValue::Array array() {
        ++pos_;
        ConfigValue::Array items;
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ']') {
            ++pos_;
            return items;
        }
        for (;;) {
            items.push_back(value());
            skip_space();
            if (pos_ >= text_.size()) fail("unterminated array");
            if (text_[pos_] == ',') {
                ++pos_;
                skip_space();
                if (pos_ < text_.size() && text_[pos_] == ']') {
                    ++pos_;
                    return items;
                }
                continue;
            }
            if (text_[pos_] == ']') {
                ++pos_;
                return items;
            }
            fail("expected ',' or ']' in array");
        }
    }

    ConfigValue scalar() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::string_view tok = text_.substr(start, pos_ - start);
        if (tok == "true") return {true};
        if (tok == "false") return {false};
        std::string cleaned;
        for (const char c : tok) {
            if (c != '_') cleaned.push_back(c);
        }
        double v = 0.0;
        const auto* first = cleaned.data();
        const auto* last = cleaned.data() + cleaned.size();
        if (!cleaned.empty() && *first == '+') ++first;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last || cleaned.empty()) {
            fail("cannot parse value '" + std::string(tok) + "'");
        }
        return {v};
    }

    std::string_view text_;
    std::string where_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string ConfigValue::to_text() const {
    if (const auto* d = std::get_if<double>(&value)) return format_number(*d);
    if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
    if (const auto* s = std::get_if<std::string>(&value)) {
        std::string out = "\"";
        for (const char c : *s) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        return out + "\"";
    }
    const auto& arr = std::get<Array>(value);
    std::string out = "[";
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (i) out += ", ";
        out += arr[i].to_text();
    }
    return out + "]";
}

ConfigDocument ConfigDocument::parse(std::string_view text, const std::string& source) {
    ConfigDocument doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            const std::size_t close = line.find(']');
            if (close == std::string_view::npos) throw ConfigError(where + ": unterminated section header");
            section = std::string(trim(line.substr(1, close - 1)));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            const std::string_view rest = trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') throw ConfigError(where + ": text after section header");
            doc.sections_[section];
            if (end == text.size()) break;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        for (const char c : key) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
                throw ConfigError(where + ": invalid character in key '" + key + "'");
            }
        }
        auto& sec = doc.sections_[section];
        if (sec.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        LineParser parser(line.substr(eq + 1), where);
        ConfigValue v = parser.value();
        parser.expect_end();
        sec.emplace(key, std::move(v));
        if (end == text.size()) break;
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool ConfigDocument::has(std::string_view section, std::string_view key) const {
    const auto s = sections_.find(std::string(section));
    return s != sections_.end() && s->second.count(std::string(key)) > 0;
}

const ConfigValue& ConfigDocument::get(std::string_view section, std::string_view key) const {
    const auto s = sections_.find(std::string(section));
    if (s != sections_.end()) {
        const auto k = s->second.find(std::string(key));
        if (k != s->second.end()) return k->second;
    }
    throw ConfigError("missing config key [" + std::string(section) + "] " + std::string(key));
}

namespace {

std::string label(std::string_view section, std::string_view key) {
    return "[" + std::string(section) + "] " + std::string(key);
}

}  // namespace

double ConfigDocument::number(std::string_view section, std::string_view key) const {
    const ConfigValue& v = get(section, key);
    if (!v.is_number()) throw ConfigError(label(section, key) + " must be a number");
    return std::get<double>(v.value);
}

double ConfigDocument::number_or(std::string_view section, std::string_view key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
}

std::uint64_t ConfigDocument::integer(std::string_view section, std::string_view key) const {
    const double v = number(section, key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
        throw ConfigError(label(section, key) + " must be a nonnegative integer");
    }
    return static_cast<std::uint64_t>(v);
}

std::uint64_t ConfigDocument::integer_or(std::string_view section, std::string_view key,
                                         std::uint64_t fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
}

bool ConfigDocument::flag_or(std::string_view section, std::string_view key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = get(section, key);
    if (!v.is_bool()) throw ConfigError(label(section, key) + " must be true or false");
    return std::get<bool>(v.value);
}

std::string ConfigDocument::text(std::string_view section, std::string_view key) const {
    const ConfigValue& v = get(section, key);
    if (!v.is_string()) throw ConfigError(label(section, key) + " must be a string");
    return std::get<std::string>(v.value);
}

std::string ConfigDocument::text_or(std::string_view section, std::string_view key,
                                    const std::string& fallback) const {
    return has(section, key) ? text(section, key) : fallback;
}

std::vector<double> ConfigDocument::numbers(std::string_view section, std::string_view key) const {
    const ConfigValue& v = get(section, key);
    if (v.is_number()) return {std::get<double>(v.value)};
    if (!v.is_array()) throw ConfigError(label(section, key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& item : std::get<ConfigValue::Array>(v.value)) {
        if (!item.is_number()) throw ConfigError(label(section, key) + " must be an array of numbers");
        out.push_back(std::get<double>(item.value));
    }
    return out;
}

std::vector<double> ConfigDocument::numbers_or(std::string_view section, std::string_view key,
                                               std::vector<double> fallback) const {
    return has(section, key) ? numbers(section, key) : fallback;
}

std::vector<std::string> ConfigDocument::texts_or(std::string_view section, std::string_view key,
                                                  std::vector<std::string> fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = get(section, key);
    if (v.is_string()) return {std::get<std::string>(v.value)};
    if (!v.is_array()) throw ConfigError(label(section, key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : std::get<ConfigValue::Array>(v.value)) {
        if (!item.is_string()) throw ConfigError(label(section, key) + " must be an array of strings");
        out.push_back(std::get<std::string>(item.value));
    }
    return out;
}

std::vector<std::string> ConfigDocument::keys_with_prefix(std::string_view section,
                                                          std::string_view prefix) const {
    std::vector<std::string> out;
    const auto s = sections_.find(std::string(section));
    if (s == sections_.end()) return out;
    for (const auto& [key, value] : s->second) {
        if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0) {
            out.push_back(key.substr(prefix.size()));
        }
    }
    return out;
}

void ConfigDocument::set(const std::string& section, const std::string& key, ConfigValue value) {
    sections_[section][key] = std::move(value);
}

void ConfigDocument::merge_from(const ConfigDocument& other) {
    for (const auto& [name, keys] : other.sections_) {
        auto& sec = sections_[name];
        for (const auto& [key, value] : keys) sec[key] = value;
    }
}

std::vector<std::string> ConfigDocument::section_names() const {
    std::vector<std::string> out;
    for (const auto& entry : sections_) out.push_back(entry.first);
    return out;
}

std::string ConfigDocument::to_text() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, keys] : sections_) {
        if (!name.empty()) {
            if (!first) os << '\n';
            os << '[' << name << "]\n";
        }
        first = false;
        for (const auto& [key, value] : keys) os << key << " = " << value.to_text() << '\n';
    }
    return os.str();
}

}  // namespace hiermap
