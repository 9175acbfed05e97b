#include "evver/csv.hpp"

namespace evver {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == EOF) return false;
  record_line_ = line_;

  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (;; c = in_.get()) {
    if (c == EOF) {
      fields.push_back(std::move(field));
      return true;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == delim_) {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r' && in_.peek() == '\n') {
      continue;
    } else if (ch == '\n') {
      ++line_;
      fields.push_back(std::move(field));
      return true;
    } else {
      field += ch;
      field_started = true;
    }
  }
}

}  // namespace evver
