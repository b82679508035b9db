#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hiermap {

/// A value in a run-configuration file: number, boolean, string, or a
/// one-line array of those.
struct ConfigValue {
    using Array = std::vector<ConfigValue>;
    std::variant<double, bool, std::string, Array> value;

    bool is_number() const noexcept { return std::holds_alternative<double>(value); }
    bool is_bool() const noexcept { return std::holds_alternative<bool>(value); }
    bool is_string() const noexcept { return std::holds_alternative<std::string>(value); }
    bool is_array() const noexcept { return std::holds_alternative<Array>(value); }

    std::string to_text() const;
};

/// Subset of TOML used by run configurations:
///
///   # comment
///   [section]
///   key = 1.5
///   dotted.key = "text"
///   list = [1, 2, 4]
///   flag = true
///
/// Dotted keys stay flat ("fixed.nu" is a key of its section). Arrays must fit
/// on one line. Keys outside any section belong to section "".
class ConfigDocument {
public:
    static ConfigDocument parse(std::string_view text, const std::string& source = "<string>");
    static ConfigDocument load(const std::filesystem::path& path);

    bool has(std::string_view section, std::string_view key) const;
    const ConfigValue& get(std::string_view section, std::string_view key) const;

    double number(std::string_view section, std::string_view key) const;
    double number_or(std::string_view section, std::string_view key, double fallback) const;
    std::uint64_t integer(std::string_view section, std::string_view key) const;
    std::uint64_t integer_or(std::string_view section, std::string_view key, std::uint64_t fallback) const;
    bool flag_or(std::string_view section, std::string_view key, bool fallback) const;
    std::string text(std::string_view section, std::string_view key) const;
    std::string text_or(std::string_view section, std::string_view key, const std::string& fallback) const;
    std::vector<double> numbers(std::string_view section, std::string_view key) const;
    std::vector<double> numbers_or(std::string_view section, std::string_view key,
                                   std::vector<double> fallback) const;
    std::vector<std::string> texts_or(std::string_view section, std::string_view key,
                                      std::vector<std::string> fallback) const;

    /// Keys of a section that start with prefix (e.g. "fixed."), prefix stripped.
    std::vector<std::string> keys_with_prefix(std::string_view section, std::string_view prefix) const;

    void set(const std::string& section, const std::string& key, ConfigValue value);

    /// Copies every key of other into this document, replacing existing values.
    void merge_from(const ConfigDocument& other);
    std::vector<std::string> section_names() const;

    /// Canonical text form (sorted sections and keys) that parses back to the same document.
    std::string to_text() const;

private:
    std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

}  // namespace hiermap
