#include "autotune/keyvalue.hpp"

#include <fstream>

#include "autotune/errors.hpp"

namespace autotune {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

KeyValueFile KeyValueFile::parse(std::istream& in) {
    KeyValueFile file;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
        }
        auto key = trim(std::string_view(text).substr(0, eq));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(number) + ": empty key");
        }
        file.entries_.push_back({std::move(key), trim(std::string_view(text).substr(eq + 1)), number});
    }
    return file;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    return parse(in);
}

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
    std::optional<std::string> found;
    for (const auto& e : entries_) {
        if (e.key == key) {
            found = e.value;
        }
    }
    return found;
}

}  // namespace autotune
