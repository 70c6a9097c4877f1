#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace hoipc::svg {

namespace {

constexpr double kWidth = 720, kHeight = 440, kLeft = 80, kRight = 200, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0, hi = 1;
  if (hi - lo <= 1e-300 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(std::abs(hi) * 0.05, 1e-12);
    lo -= pad;
    hi += pad;
  }
}

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 - kRight / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  const double L = kLeft, R = kWidth - kRight, T = kTop, B = kHeight - kBottom;
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L << "\" height=\"" << B - T
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4, yv = f.y0 + (f.y1 - f.y0) * i / 4;
    o << "<text x=\"" << f.px(xv) << "\" y=\"" << B + 16 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    o << "<line x1=\"" << L << "\" x2=\"" << R << "\" y1=\"" << f.py(yv) << "\" y2=\"" << f.py(yv)
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << (L + R) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + B) / 2
    << ")\">" << escape(yl) << "</text>\n";
}

}  // namespace

LinePlot::LinePlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

void LinePlot::add(std::string name, std::vector<double> x, std::vector<double> y, bool dashed) {
  series_.push_back({std::move(name), std::move(x), std::move(y), dashed});
}

std::string LinePlot::render() const {
  const double inf = std::numeric_limits<double>::infinity();
  Frame f{inf, -inf, inf, -inf};
  for (const auto& s : series_)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  std::ostringstream o;
  axes(o, f, title_, xlabel_, ylabel_);
  for (std::size_t k = 0; k < series_.size(); ++k) {
    const auto& s = series_[k];
    const char* color = kColors[k % 8];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
    o << "\"/>\n";
    const double ly = kTop + 16 + 18 * k;
    o << "<line x1=\"" << kWidth - kRight + 12 << "\" x2=\"" << kWidth - kRight + 36 << "\" y1=\"" << ly << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
      << "/>\n<text x=\"" << kWidth - kRight + 42 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string histogram(const std::string& title, const std::string& xlabel, const std::vector<double>& values) {
  std::map<long, int> bins;
  for (double v : values)
    if (std::isfinite(v)) ++bins[std::lround(v)];
  long lo = bins.empty() ? 0 : bins.begin()->first, hi = bins.empty() ? 1 : bins.rbegin()->first;
  int peak = 1;
  for (const auto& [k, c] : bins) peak = std::max(peak, c);
  Frame f{lo - 0.5, hi + 0.5, 0.0, static_cast<double>(peak)};
  std::ostringstream o;
  axes(o, f, title, xlabel, "steps");
  const double w = (f.px(1.0) - f.px(0.0)) * 0.8;
  for (const auto& [k, c] : bins)
    o << "<rect x=\"" << num(f.px(static_cast<double>(k)) - w / 2) << "\" y=\"" << num(f.py(c)) << "\" width=\"" << num(w)
      << "\" height=\"" << num(f.py(0) - f.py(c)) << "\" fill=\"" << kColors[0] << "\"/>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace hoipc::svg
