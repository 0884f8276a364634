#include "genlab/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "genlab/cli/config.hpp"

namespace genlab::cli::svg {

namespace {

constexpr double kMargin = 70.0;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {}

  double px(double v) const { return kMargin + (v - x_.lo) / (x_.hi - x_.lo) * (kSize - 2 * kMargin); }
  double py(double v) const { return kSize - kMargin - (v - y_.lo) / (y_.hi - y_.lo) * (kSize - 2 * kMargin); }

  void frame(const std::string& title, const std::string& xl, const std::string& yl) {
    os_ << "<rect width=\"" << kSize << "\" height=\"" << kSize << "\" fill=\"white\"/>\n";
    os_ << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize - 2 * kMargin << "\" height=\""
        << kSize - 2 * kMargin << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0, yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      os_ << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << kSize - kMargin + 20
          << "\" font-size=\"12\" text-anchor=\"middle\">" << label(xv) << "</text>\n";
      os_ << "<text x=\"" << kMargin - 8 << "\" y=\"" << fmt(py(yv) + 4)
          << "\" font-size=\"12\" text-anchor=\"end\">" << label(yv) << "</text>\n";
    }
    os_ << "<text x=\"" << kSize / 2 << "\" y=\"36\" font-size=\"18\" text-anchor=\"middle\">" << escape(title)
        << "</text>\n";
    if (!xl.empty()) {
      os_ << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 24 << "\" font-size=\"14\" text-anchor=\"middle\">"
          << escape(xl) << "</text>\n";
    }
    if (!yl.empty()) {
      os_ << "<text x=\"20\" y=\"" << kSize / 2 << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
          << kSize / 2 << ")\">" << escape(yl) << "</text>\n";
    }
  }

  std::ostringstream& body() { return os_; }

  std::string document() const {
    std::ostringstream doc;
    doc << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
        << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n"
        << os_.str() << "</svg>\n";
    return doc.str();
  }

 private:
  Range x_, y_;
  std::ostringstream os_;
};

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string scatter(const Tensor& xy, const std::string& title) {
  Range rx, ry;
  for (std::size_t i = 0; i < xy.rows(); ++i) {
    rx.add(xy(i, 0));
    ry.add(xy(i, 1));
  }
  rx.finish();
  ry.finish();
  Canvas c(rx, ry);
  c.frame(title, "x0", "x1");
  for (std::size_t i = 0; i < xy.rows(); ++i) {
    if (!std::isfinite(xy(i, 0)) || !std::isfinite(xy(i, 1))) continue;
    c.body() << "<circle cx=\"" << fmt(c.px(xy(i, 0))) << "\" cy=\"" << fmt(c.py(xy(i, 1)))
             << "\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
  }
  return c.document();
}

std::string lines(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                  const std::string& y_label) {
  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.finish();
  ry.finish();
  Canvas c(rx, ry);
  c.frame(title, x_label, y_label);
  std::size_t k = 0;
  for (const auto& s : series) {
    c.body() << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << kPalette[k++ % 6] << "\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    // thin long traces to ~2000 vertices
    const std::size_t stride = std::max<std::size_t>(1, n / 2000);
    for (std::size_t i = 0; i < n; i += stride) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) c.body() << fmt(c.px(s.x[i])) << ',' << fmt(c.py(s.y[i])) << ' ';
    }
    c.body() << "\"/>\n";
  }
  return c.document();
}

void write_file(const std::string& path, const std::string& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << doc;
}

}  // namespace genlab::cli::svg
