#ifndef TESTALLOC_CSV_H_
#define TESTALLOC_CSV_H_

#include <string>
#include <vector>

namespace testalloc {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// 17 significant digits, which round-trips every double. NaN prints as "nan".
std::string format_real(double value);

std::string to_csv(const CsvTable& table);

// Parses RFC 4180 style text with a header row. Throws std::runtime_error on
// ragged rows or unterminated quotes.
CsvTable parse_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace testalloc

#endif  // TESTALLOC_CSV_H_
