#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "overlap_lab/errors.hpp"

namespace overlap_lab {

/// Minimal RFC-4180 writer: comma separated, CRLF-free '\n' rows, '.' decimal
/// point regardless of locale, doubles in shortest round-trip form.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path + " for writing");
  }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k) out_ << ',';
      write_field(cols[k]);
    }
    out_ << '\n';
  }

  CsvWriter& operator<<(double v) {
    sep();
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("csv: cannot format value");
    out_.write(buf, end - buf);
    return *this;
  }

  CsvWriter& operator<<(std::uint64_t v) {
    sep();
    out_ << v;
    return *this;
  }

  CsvWriter& operator<<(std::string_view s) {
    sep();
    write_field(s);
    return *this;
  }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  void write_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
      out_ << s;
      return;
    }
    out_ << '"';
    for (char c : s) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace overlap_lab
