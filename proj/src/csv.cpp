#include "tigh/csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "tigh/errors.hpp"

namespace tigh {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::col_required(const std::string& name) const {
  int c = col(name);
  if (c < 0) throw InputError("missing required column '" + name + "'");
  return c;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && !first) continue;
    auto cells = split_line(line);
    if (first) {
      t.header = cells;
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) throw InputError(path + ": empty file");
  return t;
}

double cell_to_double(const std::string& cell) {
  if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN")
    return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf" || cell == "+inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  const char* s = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') throw InputError("bad numeric cell '" + cell + "'");
  return v;
}

long long cell_to_int(const std::string& cell) {
  const char* s = cell.c_str();
  char* end = nullptr;
  long long v = std::strtoll(s, &end, 10);
  if (end == s || *end != '\0') throw InputError("bad integer cell '" + cell + "'");
  return v;
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  // Avoid the two spellings of zero.
  if (buf[0] == '-') {
    bool all_zero = true;
    for (const char* p = buf + 1; *p; ++p)
      if (*p != '0' && *p != '.') all_zero = false;
    if (all_zero) return std::string(buf + 1);
  }
  return std::string(buf);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("short write to " + path);
}

}  // namespace tigh
