#pragma once

// Column-oriented curve tables. On disk: UTF-8, comma separated, mandatory
// header, first column "t" in seconds, values written in shortest round-trip
// form so save/load is lossless.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfdecon/signals.hpp"

namespace perfdecon::io {

class CurveRecord {
 public:
  explicit CurveRecord(std::vector<double> t);

  /// Time column plus one column per series, all sharing `grid`.
  static CurveRecord from_grid(const signals::TimeGrid& grid);

  /// Appends a column; throws InvalidArgument on a length mismatch or a
  /// duplicate name.
  void add(std::string name, std::vector<double> values);
  void add(std::string name, const signals::TimeSeries& series);

  bool has(std::string_view name) const;
  std::span<const double> time() const { return t_; }
  std::span<const double> column(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t rows() const { return t_.size(); }

  /// The time column as a uniform grid; IoError if it is not uniform.
  signals::TimeGrid grid() const;
  signals::TimeSeries series(std::string_view name) const;

  friend bool operator==(const CurveRecord&, const CurveRecord&) = default;

 private:
  std::vector<double> t_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

/// Parses a table; `source` names the input in error messages.
CurveRecord read_csv(std::istream& in, const std::string& source = "<stream>");
void write_csv(const CurveRecord& record, std::ostream& out);

CurveRecord load_csv(const std::filesystem::path& path);
void save_csv(const CurveRecord& record, const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace perfdecon::io
