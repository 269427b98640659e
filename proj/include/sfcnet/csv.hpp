#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace sfcnet::csv {

// A parsed comma-separated file with a mandatory header row.
struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // 1-based source line of each row
};

// Reads `path` and checks that its header equals `columns` exactly.
// Throws DataError naming the file on any problem.
Table read(const std::filesystem::path& path,
           std::initializer_list<std::string_view> columns);

double parse_real(const Table& t, std::size_t row, std::size_t col);
std::uint64_t parse_count(const Table& t, std::size_t row, std::size_t col);

// Shortest decimal string that round-trips to the same double.
std::string format(double v);

}  // namespace sfcnet::csv
