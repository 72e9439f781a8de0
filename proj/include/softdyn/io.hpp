#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace softdyn {

/// Shortest decimal text that parses back to the same double. NaN prints empty.
std::string format_number(double v);

/// Writes to `<path>.tmp` and renames over `path`, creating parent directories.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

class CsvBuilder {
public:
    explicit CsvBuilder(std::string_view header);

    CsvBuilder& row(std::initializer_list<double> values);
    CsvBuilder& row(const std::vector<std::string>& cells);

    const std::string& str() const { return text_; }

private:
    std::string text_;
};

}  // namespace softdyn
