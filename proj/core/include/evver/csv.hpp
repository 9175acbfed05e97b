#pragma once

#include <istream>
#include <string>
#include <vector>

namespace evver {

/// Streaming RFC 4180 reader: quoted fields, doubled quotes, embedded
/// delimiters and newlines. CRLF and LF line endings both accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

  /// Reads the next record; false at end of input.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line on which the last record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

}  // namespace evver
