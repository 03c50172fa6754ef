#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autotune {

// A flat `key = value` file. Blank lines and lines starting with '#' are
// ignored; keys may repeat and keep their order of appearance.
struct KeyValueEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in);
    static KeyValueFile load(const std::string& path);

    [[nodiscard]] const std::vector<KeyValueEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::optional<std::string> get(std::string_view key) const;

private:
    std::vector<KeyValueEntry> entries_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace autotune
