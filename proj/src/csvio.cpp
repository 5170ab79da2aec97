#include "mvsde/csvio.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvsde {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {
void check_cell(const std::string& cell) {
  if (cell.find(',') != std::string::npos || cell.find('\n') != std::string::npos)
    throw InvalidArgument("csv cell contains a separator: " + cell);
}

void write_line(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    check_cell(cells[i]);
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}
}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::binary);  // binary: no newline translation
  if (!os) throw RuntimeFailure("cannot open for writing: " + path);
  write_line(os, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw InvalidArgument("csv row width does not match header: " + path);
    write_line(os, row);
  }
  os.flush();
  if (!os) throw RuntimeFailure("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open for reading: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && is.eof()) break;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw RuntimeFailure("empty csv: " + path);
  return t;
}

Vec numeric_column(const CsvTable& table, const std::string& name) {
  const int c = table.column(name);
  if (c < 0) throw InvalidArgument("csv column not found: " + name);
  Vec out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string& cell = row[static_cast<std::size_t>(c)];
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
      throw InvalidArgument("csv cell is not numeric in column " + name + ": " + cell);
    out.push_back(v);
  }
  return out;
}

std::string format_cell(double v) { return format_double(v); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw RuntimeFailure("sha256: context allocation failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw RuntimeFailure("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open for hashing: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace mvsde
