#include "fga/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string_view>

namespace fga {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits on '\n' and strips a trailing '\r'.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // from_chars rejects a leading '+'.
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_index(std::string_view s, long long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<std::string> default_feature_names(Index d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

void validate(const Dataset& ds) {
  if (ds.num_samples() < 1 || ds.num_features() < 1)
    throw DataError("dataset must have at least one row and one feature");
  if (ds.targets.size() != ds.num_samples())
    throw DataError("target count does not match row count");
  if (!all_finite(ds.features) || !all_finite(ds.targets))
    throw DataError("dataset contains non-finite values");
  if (static_cast<Index>(ds.feature_names.size()) != ds.num_features())
    throw DataError("feature_names must have one entry per feature");
  std::set<std::string> distinct(ds.feature_names.begin(), ds.feature_names.end());
  if (distinct.size() != ds.feature_names.size())
    throw DataError("feature names must be distinct");
}

Dataset parse_libsvm(const std::string& text, Index min_features) {
  struct Row {
    double target;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = trim(lines[ln]);
    if (line.empty()) continue;
    const std::size_t line_no = ln + 1;
    Row row;
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
      return line.substr(start, pos - start);
    };
    if (!parse_double(next_token(), row.target)) line_error(line_no, "malformed target");
    long long last = 0;
    for (std::string_view tok = next_token(); !tok.empty(); tok = next_token()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        line_error(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
      long long idx = 0;
      double value = 0;
      if (!parse_index(tok.substr(0, colon), idx) || idx < 1)
        line_error(line_no, "bad feature index '" + std::string(tok.substr(0, colon)) + "'");
      if (idx <= last) line_error(line_no, "feature indices must be strictly increasing");
      if (!parse_double(tok.substr(colon + 1), value))
        line_error(line_no, "bad feature value '" + std::string(tok.substr(colon + 1)) + "'");
      last = idx;
      row.entries.emplace_back(static_cast<Index>(idx - 1), value);
      max_index = std::max<Index>(max_index, static_cast<Index>(idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("libsvm input contains no rows");
  const Index d = std::max(max_index, min_features);
  if (d < 1) throw DataError("libsvm input has no features");

  Dataset ds;
  ds.features = Matrix<double>::Zero(static_cast<Index>(rows.size()), d);
  ds.targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ds.targets(static_cast<Index>(r)) = rows[r].target;
    for (const auto& [j, v] : rows[r].entries) ds.features(static_cast<Index>(r), j) = v;
  }
  ds.feature_names = default_feature_names(d);
  validate(ds);
  return ds;
}

Dataset load_libsvm(const std::filesystem::path& path, Index min_features) {
  const std::string text = read_file(path);
  try {
    return parse_libsvm(text, min_features);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  for (Index r = 0; r < ds.num_samples(); ++r) {
    out << ds.targets(r);
    for (Index j = 0; j < ds.num_features(); ++j)
      if (ds.features(r, j) != 0.0) out << ' ' << (j + 1) << ':' << ds.features(r, j);
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset parse_csv(const std::string& text, const std::string& target_column) {
  auto lines = split_lines(text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError("CSV input is empty");

  auto split_cells = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };

  const auto header = split_cells(lines.front());
  std::ptrdiff_t target_idx = -1;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column && target_idx < 0)
      target_idx = static_cast<std::ptrdiff_t>(c);
    else
      names.emplace_back(header[c]);
  }
  if (target_idx < 0) throw DataError("target column '" + target_column + "' not found in header");
  if (names.empty()) throw DataError("CSV has no feature columns");

  std::vector<std::vector<double>> feature_rows;
  std::vector<double> targets;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto cells = split_cells(lines[ln]);
    if (cells.size() != header.size())
      line_error(ln + 1, "expected " + std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(names.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0;
      if (!parse_double(cells[c], v))
        line_error(ln + 1, "non-numeric cell '" + std::string(cells[c]) + "' in column '" +
                               std::string(header[c]) + "'");
      if (static_cast<std::ptrdiff_t>(c) == target_idx)
        targets.push_back(v);
      else
        row.push_back(v);
    }
    feature_rows.push_back(std::move(row));
  }
  if (feature_rows.empty()) throw DataError("CSV has a header but no data rows");

  Dataset ds;
  ds.features.resize(static_cast<Index>(feature_rows.size()), static_cast<Index>(names.size()));
  ds.targets.resize(static_cast<Index>(targets.size()));
  for (std::size_t r = 0; r < feature_rows.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c)
      ds.features(static_cast<Index>(r), static_cast<Index>(c)) = feature_rows[r][c];
    ds.targets(static_cast<Index>(r)) = targets[r];
  }
  ds.feature_names = std::move(names);
  validate(ds);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  const std::string text = read_file(path);
  try {
    return parse_csv(text, target_column);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Dataset gen_synthetic(Index num_features, Index num_samples, int power, std::uint64_t seed) {
  if (num_features < 1 || num_samples < 1)
    throw ConfigError("synthetic data needs D >= 1 and m >= 1");
  if (power < 1) throw ConfigError("synthetic power p must be a positive integer");
  Dataset ds;
  ds.features.resize(num_samples, num_features);
  ds.targets.resize(num_samples);
  Rng rng(seed);
  for (Index i = 0; i < num_samples; ++i) {
    double sum = 0;
    for (Index j = 0; j < num_features; ++j) {
      const double x = uniform01(rng);
      ds.features(i, j) = x;
      sum += x;
    }
    double y = 1;
    for (int k = 0; k < power; ++k) y *= sum;
    ds.targets(i) = y;
  }
  ds.feature_names = default_feature_names(num_features);
  return ds;
}

std::uint64_t checksum(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (Index i = 0; i < ds.num_samples(); ++i) {
    for (Index j = 0; j < ds.num_features(); ++j) mix(ds.features(i, j));
    mix(ds.targets(i));
  }
  return h;
}

}  // namespace fga
