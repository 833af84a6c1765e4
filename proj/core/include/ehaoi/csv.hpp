#pragma once

// Minimal CSV emitter: comma separated, header row, LF line endings, floating
// values with 12 significant digits.

#include <concepts>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace ehaoi {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto n : names) {
      if (!first) out_ << ',';
      out_ << n;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((emit(values, first)), ...);
    out_ << '\n';
  }

  /// For rows whose width is only known at run time.
  template <typename T>
  void cell(const T& value, bool first) {
    bool f = first;
    emit(value, f);
  }
  void end_row() { out_ << '\n'; }

 private:
  template <typename T>
  void emit(const T& v, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::same_as<T, bool>) {
      out_ << (v ? 1 : 0);
    } else if constexpr (std::floating_point<T>) {
      out_ << format_real(v);
    } else {
      out_ << v;
    }
  }

  std::ostream& out_;
};

}  // namespace ehaoi
