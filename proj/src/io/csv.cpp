#include "perfdecon/io/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "perfdecon/error.hpp"

namespace perfdecon::io {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

CurveRecord::CurveRecord(std::vector<double> t) : t_(std::move(t)) {}

CurveRecord CurveRecord::from_grid(const signals::TimeGrid& grid) {
  return CurveRecord(grid.times());
}

void CurveRecord::add(std::string name, std::vector<double> values) {
  if (values.size() != t_.size()) {
    throw InvalidArgument("CurveRecord: column '" + name + "' has " +
                          std::to_string(values.size()) + " rows, expected " +
                          std::to_string(t_.size()));
  }
  if (name == "t" || has(name)) throw InvalidArgument("CurveRecord: duplicate column '" + name + "'");
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

void CurveRecord::add(std::string name, const signals::TimeSeries& series) {
  add(std::move(name), std::vector<double>(series.values().begin(), series.values().end()));
}

bool CurveRecord::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> CurveRecord::column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("CurveRecord: no column '" + std::string(name) + "'");
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

signals::TimeGrid CurveRecord::grid() const {
  if (t_.size() < 2) throw IoError("time column needs at least 2 rows");
  const double dt = t_[1] - t_[0];
  if (!(dt > 0.0)) throw IoError("time column must be increasing");
  for (std::size_t j = 0; j < t_.size(); ++j) {
    const double expected = t_[0] + static_cast<double>(j) * dt;
    if (std::abs(t_[j] - expected) > 1e-6 * dt) {
      throw IoError("time column is not uniformly sampled (row " + std::to_string(j + 2) + ")");
    }
  }
  // Least-squares spacing of an exact grid is (t_last - t_0)/(n-1).
  const double span_dt = (t_.back() - t_.front()) / static_cast<double>(t_.size() - 1);
  return signals::TimeGrid(t_.front(), span_dt, t_.size());
}

signals::TimeSeries CurveRecord::series(std::string_view name) const {
  const auto col = column(name);
  return signals::TimeSeries(grid(), std::vector<double>(col.begin(), col.end()));
}

CurveRecord read_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (line_no == 0 || trim(line).empty()) throw IoError(source + ": empty file, header required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (std::string_view cell : split(line)) header.emplace_back(trim(cell));
  if (header.front() != "t") {
    throw IoError(source + ":" + std::to_string(line_no) + ": first column must be 't'");
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw IoError(source + ":" + std::to_string(line_no) + ": empty column name");
    }
    if (std::count(header.begin(), header.end(), header[c]) > 1) {
      throw IoError(source + ":" + std::to_string(line_no) + ": duplicate column '" +
                    header[c] + "'");
    }
  }

  std::vector<std::vector<double>> cols(header.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw IoError(source + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " cells, found " +
                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string_view cell = trim(cells[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw IoError(source + ":" + std::to_string(line_no) + ": column '" + header[c] +
                      "': not a number: '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw IoError(source + ":" + std::to_string(line_no) + ": column '" + header[c] +
                      "': non-finite value '" + std::string(cell) + "'");
      }
      cols[c].push_back(v);
    }
  }

  CurveRecord record(std::move(cols[0]));
  for (std::size_t c = 1; c < header.size(); ++c) record.add(header[c], std::move(cols[c]));
  return record;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("cannot format value");
  return std::string(buf.data(), ptr);
}

void write_csv(const CurveRecord& record, std::ostream& out) {
  out << 't';
  for (const auto& name : record.names()) out << ',' << name;
  out << '\n';
  std::vector<std::span<const double>> cols;
  for (const auto& name : record.names()) cols.push_back(record.column(name));
  for (std::size_t j = 0; j < record.rows(); ++j) {
    out << format_double(record.time()[j]);
    for (const auto& col : cols) out << ',' << format_double(col[j]);
    out << '\n';
  }
}

CurveRecord load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, path.string());
}

void save_csv(const CurveRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(record, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace perfdecon::io
