#pragma once
// Small text/CSV helpers shared by the readers and artifact writers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nflow::io {

/// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line);
std::string csv_field(std::string_view s);

/// Fixed textual form for reals in every artifact (byte-stable).
std::string fmt_real(double v);

struct Line {
  std::size_t number;
  std::string text;
};
/// All lines of a text file, CR stripped. Throws InputError if unreadable.
std::vector<Line> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// SplitMix64 step; used to derive child seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace nflow::io
