#include "sfcnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sfcnet/errors.hpp"

namespace sfcnet::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string where(const Table& t, std::size_t row, std::size_t col) {
  std::ostringstream os;
  os << t.path << ":" << t.line[row];
  if (col < t.header.size()) os << " field '" << t.header[col] << "'";
  return os.str();
}

}  // namespace

Table read(const std::filesystem::path& path,
           std::initializer_list<std::string_view> columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());

  Table t;
  t.path = path.string();
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (lineno == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    auto fields = split(view);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      std::ostringstream os;
      os << t.path << ":" << lineno << ": expected " << t.header.size() << " fields, got "
         << fields.size();
      throw DataError(os.str());
    }
    t.rows.push_back(std::move(fields));
    t.line.push_back(lineno);
  }
  if (!have_header) throw DataError(t.path + ": empty file");

  std::vector<std::string> want(columns.begin(), columns.end());
  if (t.header != want) {
    std::string expected;
    for (auto& c : want) expected += (expected.empty() ? "" : ",") + c;
    throw DataError(t.path + ": header mismatch, expected '" + expected + "'");
  }
  return t;
}

double parse_real(const Table& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError(where(t, row, col) + ": not a number: '" + s + "'");
  if (v < 0.0) throw DataError(where(t, row, col) + ": negative value " + s);
  return v;
}

std::uint64_t parse_count(const Table& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  if (!s.empty() && s.front() == '-')
    throw DataError(where(t, row, col) + ": negative value " + s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(where(t, row, col) + ": not a nonnegative integer: '" + s + "'");
  return v;
}

std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace sfcnet::csv
