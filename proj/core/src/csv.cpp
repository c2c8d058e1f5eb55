#include "policylab/csv.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <vector>

#include "policylab/error.hpp"

namespace policylab {

namespace {

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
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
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Index after a prefix letter, e.g. "x12" -> 12; 0 when not of that form.
std::size_t column_index(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return 0;
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc() || ptr != name.data() + name.size()) return 0;
  return k;
}

struct Layout {
  std::size_t y = 0, d = 0, e = 0;
  std::vector<std::size_t> x, m;
  std::optional<std::size_t> a;
  std::size_t columns = 0;
};

Layout parse_header(std::string_view line) {
  const auto cells = split_row(line);
  Layout layout;
  layout.columns = cells.size();
  std::optional<std::size_t> id, y, d, e;
  std::vector<std::pair<std::size_t, std::size_t>> xs, ms;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto name = trim(cells[c]);
    if (name == "id") {
      id = c;
    } else if (name == "y") {
      y = c;
    } else if (name == "d") {
      d = c;
    } else if (name == "e") {
      e = c;
    } else if (name == "a") {
      layout.a = c;
    } else if (auto k = column_index(name, 'x')) {
      xs.emplace_back(k, c);
    } else if (auto k = column_index(name, 'm')) {
      ms.emplace_back(k, c);
    } else {
      throw ParseError("unknown CSV column '" + std::string(name) + "'");
    }
  }
  if (!id || !y || !d || !e) throw ParseError("CSV header must contain id, y, d and e");
  const auto order = [](auto& cols, char prefix, std::vector<std::size_t>& out) {
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i].first != i + 1) {
        throw ParseError(std::string("CSV columns ") + prefix + "1.." + prefix + std::to_string(cols.size()) +
                         " must be numbered consecutively from 1");
      }
      out.push_back(cols[i].second);
    }
  };
  order(xs, 'x', layout.x);
  order(ms, 'm', layout.m);
  layout.y = *y;
  layout.d = *d;
  layout.e = *e;
  return layout;
}

std::string row_context(std::size_t line_no) { return " on line " + std::to_string(line_no); }

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(std::string_view cell, std::string_view what) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("malformed number '" + std::string(cell) + "' in " + std::string(what));
  }
  return value;
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  Layout layout;
  bool have_header = false;
  Dataset d;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      layout = parse_header(line);
      have_header = true;
      continue;
    }
    const auto cells = split_row(line);
    if (cells.size() != layout.columns) {
      throw ParseError("expected " + std::to_string(layout.columns) + " cells, found " +
                       std::to_string(cells.size()) + row_context(line_no));
    }
    const std::string where = "row" + row_context(line_no);
    Observation o;
    o.outcome = parse_real(cells[layout.y], "y " + where);
    const double treated = parse_real(cells[layout.d], "d " + where);
    if (treated != 0.0 && treated != 1.0) throw ParseError("d must be 0 or 1" + row_context(line_no));
    o.treated = treated == 1.0;
    o.propensity = parse_real(cells[layout.e], "e " + where);
    if (!(o.propensity > 0.0 && o.propensity < 1.0)) throw ParseError("e must lie in (0, 1)" + row_context(line_no));
    o.covariates.reserve(layout.x.size());
    for (auto c : layout.x) o.covariates.push_back(parse_real(cells[c], "covariate " + where));
    for (auto c : layout.m) {
      if (trim(cells[c]).empty()) continue;
      o.measurements.push_back(parse_real(cells[c], "measurement " + where));
    }
    if (layout.a && !trim(cells[*layout.a]).empty()) o.latent = parse_real(cells[*layout.a], "a " + where);
    d.observations.push_back(std::move(o));
  }
  if (in.bad()) throw IoError("read failure");
  if (!have_header) throw ParseError("CSV has no header row");
  return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  const std::size_t dim = d.dimension();
  std::size_t k = 0;
  bool latent = false;
  for (const auto& o : d.observations) {
    k = std::max(k, o.measurements.size());
    latent = latent || o.latent.has_value();
  }
  out << "id,y,d,e";
  for (std::size_t j = 1; j <= dim; ++j) out << ",x" << j;
  for (std::size_t j = 1; j <= k; ++j) out << ",m" << j;
  if (latent) out << ",a";
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& o = d.observations[i];
    if (o.covariates.size() != dim) throw ConfigError("row " + std::to_string(i) + " has a different dimension");
    out << i << ',' << format_real(o.outcome) << ',' << (o.treated ? 1 : 0) << ',' << format_real(o.propensity);
    for (double x : o.covariates) out << ',' << format_real(x);
    for (std::size_t j = 0; j < k; ++j) {
      out << ',';
      if (j < o.measurements.size()) out << format_real(o.measurements[j]);
    }
    if (latent) {
      out << ',';
      if (o.latent) out << format_real(*o.latent);
    }
    out << '\n';
  }
}

std::string dataset_csv(const Dataset& d) {
  std::ostringstream out;
  write_dataset_csv(out, d);
  return std::move(out).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

}  // namespace policylab
