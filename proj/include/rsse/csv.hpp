#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "design.hpp"
#include "error.hpp"

namespace rsse::csv {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Decimal point, no thousands separators, independent of the global locale.
inline double parse_number(std::string_view s, std::size_t line, std::size_t col) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw IngestionError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": '" + std::string(s) +
                         "' is not a number");
  return v;
}

}  // namespace detail

/// Header row plus numeric body.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return c;
    throw IngestionError("missing column '" + name + "'");
  }
};

inline Table parse_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cells = detail::split(view);
    if (!header) {
      for (auto c : cells) {
        if (c.empty()) throw IngestionError("line " + std::to_string(lineno) + ": empty column name");
        t.columns.emplace_back(c);
      }
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw IngestionError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                           " fields, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row[c] = detail::parse_number(cells[c], lineno, c + 1);
    t.rows.push_back(std::move(row));
  }
  if (!header) throw IngestionError("CSV has no header row");
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return parse_table(in);
}

/// Whole table (or the named columns) as a finite population.
inline FinitePopulation to_population(const Table& t, const std::vector<std::string>& names = {}) {
  std::vector<std::size_t> idx;
  FinitePopulation pop;
  if (names.empty()) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) idx.push_back(c);
    pop.columns = t.columns;
  } else {
    for (const auto& n : names) idx.push_back(t.column_index(n));
    pop.columns = names;
  }
  if (t.rows.empty()) throw IngestionError("population CSV has no data rows");
  std::vector<double> v;
  v.reserve(t.rows.size() * idx.size());
  for (const auto& row : t.rows)
    for (std::size_t c : idx) v.push_back(row[c]);
  pop.rows = PointSet(idx.size(), std::move(v));
  return pop;
}

inline FinitePopulation read_population(const std::string& path, const std::vector<std::string>& names = {}) {
  return to_population(read_table(path), names);
}

/// A ranked set sample stored as cycle,rank,<value columns> with 1-based
/// cycle and rank. Rows may come in any order; every (rank, cycle) pair
/// must appear exactly once.
struct SampleTable {
  std::vector<std::string> columns;  // value columns
  RankedSetSample sample;
};

inline SampleTable to_sample(const Table& t, const std::vector<std::string>& names = {}, int r = 1) {
  const std::size_t ci = t.column_index("cycle"), ri = t.column_index("rank");
  std::vector<std::size_t> idx;
  std::vector<std::string> cols;
  if (names.empty()) {
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      if (c != ci && c != ri) {
        idx.push_back(c);
        cols.push_back(t.columns[c]);
      }
  } else {
    for (const auto& n : names) idx.push_back(t.column_index(n));
    cols = names;
  }
  if (idx.empty()) throw IngestionError("sample CSV has no value columns");
  if (t.rows.empty()) throw IngestionError("sample CSV has no data rows");
  auto as_index = [](double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw IngestionError(std::string(what) + " must be a positive integer");
    return static_cast<std::size_t>(v) - 1;
  };
  std::size_t k = 0, m = 0;
  for (const auto& row : t.rows) {
    k = std::max(k, as_index(row[ri], "rank") + 1);
    m = std::max(m, as_index(row[ci], "cycle") + 1);
  }
  if (k * m != t.rows.size())
    throw IngestionError("sample CSV needs every rank 1.." + std::to_string(k) + " in every cycle 1.." +
                         std::to_string(m));
  std::vector<double> v(k * m * idx.size());
  std::vector<char> seen(k * m, 0);
  for (const auto& row : t.rows) {
    const std::size_t slot = as_index(row[ci], "cycle") * k + as_index(row[ri], "rank");
    if (seen[slot]) throw IngestionError("duplicate (cycle, rank) row in sample CSV");
    seen[slot] = 1;
    for (std::size_t c = 0; c < idx.size(); ++c) v[slot * idx.size() + c] = row[idx[c]];
  }
  Design d;
  d.k = static_cast<int>(k);
  d.m = static_cast<int>(m);
  d.r = r;
  d.rank_by = 0;
  return {cols, RankedSetSample(d, PointSet(idx.size(), std::move(v)))};
}

inline SampleTable read_sample(const std::string& path, const std::vector<std::string>& names = {}, int r = 1) {
  return to_sample(read_table(path), names, r);
}

inline void write_sample(std::ostream& out, const RankedSetSample& s, const std::vector<std::string>& names = {}) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(17) << "cycle,rank";
  for (std::size_t c = 0; c < s.dim(); ++c) buf << ',' << (c < names.size() ? names[c] : "x" + std::to_string(c + 1));
  buf << '\n';
  for (std::size_t j = 0; j < s.m(); ++j)
    for (std::size_t i = 0; i < s.k(); ++i) {
      buf << j + 1 << ',' << i + 1;
      for (double x : s.at(i, j)) buf << ',' << x;
      buf << '\n';
    }
  out << buf.str();
}

}  // namespace rsse::csv
