#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace nclab {

// %.{digits}g with '.' as decimal separator regardless of locale.
std::string format_real(double value, int significant_digits = 15);
double parse_real(const std::string& text);

// Comma-separated rows terminated by LF.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path, bool append = false);
    void row(const std::vector<std::string>& fields);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t file_checksum(const std::string& path);
std::string hex64(std::uint64_t value);

}  // namespace nclab
