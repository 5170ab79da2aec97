#pragma once

// CSV artifacts with bit-stable formatting: every float is written with 17
// significant digits so read-write round trips are exact, and identical runs
// produce byte-identical files.

#include <string>
#include <vector>

#include "mvsde/common.hpp"

namespace mvsde {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Cells must not contain commas or newlines (values here are numbers and
// short identifiers); enforced on write.
void write_csv(const std::string& path, const CsvTable& table);

CsvTable read_csv(const std::string& path);

// Column parsed as doubles; throws when the column is missing or non-numeric.
Vec numeric_column(const CsvTable& table, const std::string& name);

std::string format_cell(double v);  // 17 significant digits

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace mvsde
