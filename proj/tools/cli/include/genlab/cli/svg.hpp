#pragma once

#include <string>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab::cli::svg {

inline constexpr int kSize = 800;

// Scatter of the first two columns.
std::string scatter(const Tensor& xy, const std::string& title);

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};
std::string lines(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                  const std::string& y_label);

void write_file(const std::string& path, const std::string& doc);

}  // namespace genlab::cli::svg
