#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab::csv {

// Shortest form that keeps 17 significant digits ("%.17g").
std::string format_double(double v);

// Header row then one row per tensor row; '\n' line endings.
void write(std::ostream& os, const std::vector<std::string>& header, const Tensor& rows);
// Header `x0,x1,...` for a d-column sample matrix.
void write_samples(std::ostream& os, const Tensor& x);
std::vector<std::string> sample_header(std::size_t d);

struct Table {
  std::vector<std::string> header;
  Tensor values;
};
// Numeric CSV with a header row. Throws ContractError on malformed input.
Table read(std::istream& is);

}  // namespace genlab::csv
