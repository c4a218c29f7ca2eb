#pragma once

#include <string>
#include <vector>

namespace tigh {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;       // -1 if absent
  int col_required(const std::string& name) const;  // throws InputError
};

// Reads a comma-separated file with a header row. Cells are plain (no quoting
// rules); surrounding whitespace is trimmed. Every row must have the same
// number of cells as the header.
CsvTable read_csv(const std::string& path);

// Empty cell or NA/nan -> quiet NaN; inf/-inf supported; anything else that
// does not parse fully as a number throws InputError.
double cell_to_double(const std::string& cell);

// Parses a non-negative integer cell; throws InputError on junk.
long long cell_to_int(const std::string& cell);

// Fixed-precision decimal formatting used by every CSV writer so that repeat
// runs are byte-identical.
std::string format_fixed(double value, int decimals);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tigh
