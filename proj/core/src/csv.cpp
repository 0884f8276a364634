#include "genlab/csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "genlab/errors.hpp"

namespace genlab::csv {

std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

void write(std::ostream& os, const std::vector<std::string>& header, const Tensor& rows) {
  if (!rows.empty() && header.size() != rows.cols()) {
    throw DimensionError("csv: header has " + std::to_string(header.size()) + " columns, data has " +
                         std::to_string(rows.cols()));
  }
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n';
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) os << (j ? "," : "") << format_double(rows(i, j));
    os << '\n';
  }
}

std::vector<std::string> sample_header(std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t j = 0; j < d; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

void write_samples(std::ostream& os, const Tensor& x) { write(os, sample_header(x.cols()), x); }

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e) {
    throw ContractError("csv: line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
  }
  return v;
}

}  // namespace

Table read(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw ContractError("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ContractError("csv: line " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(t.header.size()));
    }
    for (const auto& c : cells) values.push_back(parse(c, line_no));
    ++rows;
  }
  t.values = Tensor(rows, t.header.size(), std::move(values));
  return t;
}

}  // namespace genlab::csv
