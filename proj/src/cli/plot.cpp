#include "tssr/cli/plot.hpp"

#include "tssr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tssr::cli {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Nice tick spacing: 1, 2 or 5 times a power of ten.
double tick_step(double span, int target) {
  const double raw = span / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const OverlayPlot& plot) {
  require(!plot.series.empty(), ErrorKind::InvalidArgument, "plot: nothing to draw");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& p : plot.series) {
    require(p.series.size() >= 1, ErrorKind::InvalidArgument, "plot: empty series '" + p.label + "'");
    x0 = std::min(x0, p.series.time_at(0) / 3600.0);
    x1 = std::max(x1, p.series.time_at(p.series.size() - 1) / 3600.0);
    y0 = std::min(y0, p.series.values().minCoeff());
    y1 = std::max(y1, p.series.values().maxCoeff());
  }
  require(std::isfinite(y0) && std::isfinite(y1), ErrorKind::Data, "plot: non-finite values");
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) { y0 -= 0.5; y1 += 0.5; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double left = 70, right = 170, top = 40, bottom = 50;
  const double w = plot.width - left - right, h = plot.height - top - bottom;
  auto sx = [&](double t) { return left + (t - x0) / (x1 - x0) * w; };
  auto sy = [&](double v) { return top + (y1 - v) / (y1 - y0) * h; };

  std::ostringstream o;
  o << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << plot.width << R"(" height=")" << plot.height
    << R"(" font-family="sans-serif" font-size="12">)" << '\n';
  o << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  o << R"(<text x=")" << num(left + w / 2) << R"(" y="22" text-anchor="middle" font-size="15">)" << escape(plot.title)
    << "</text>\n";

  const double xs = tick_step(x1 - x0, 8), ys = tick_step(y1 - y0, 6);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9; t += xs) {
    o << R"(<line x1=")" << num(sx(t)) << R"(" x2=")" << num(sx(t)) << R"(" y1=")" << num(top) << R"(" y2=")"
      << num(top + h) << R"(" stroke="#eee"/>)";
    o << R"(<text x=")" << num(sx(t)) << R"(" y=")" << num(top + h + 16) << R"(" text-anchor="middle">)"
      << tick_label(t) << "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-12; v += ys) {
    o << R"(<line x1=")" << num(left) << R"(" x2=")" << num(left + w) << R"(" y1=")" << num(sy(v)) << R"(" y2=")"
      << num(sy(v)) << R"(" stroke="#eee"/>)";
    o << R"(<text x=")" << num(left - 6) << R"(" y=")" << num(sy(v) + 4) << R"(" text-anchor="end">)"
      << tick_label(v) << "</text>\n";
  }
  o << R"(<rect x=")" << num(left) << R"(" y=")" << num(top) << R"(" width=")" << num(w) << R"(" height=")" << num(h)
    << R"(" fill="none" stroke="#333"/>)" << '\n';
  o << R"(<text x=")" << num(left + w / 2) << R"(" y=")" << plot.height - 10 << R"(" text-anchor="middle">)"
    << escape(plot.x_label) << "</text>\n";
  o << R"~(<text transform="rotate(-90)" x=")~" << num(-(top + h / 2)) << R"(" y="18" text-anchor="middle">)"
    << escape(plot.y_label) << "</text>\n";

  for (const auto& p : plot.series) {
    const TimeSeries& s = p.series;
    if (p.markers) {
      o << "<g fill=\"" << p.color << "\">";
      for (Index k = 0; k < s.size(); ++k)
        o << R"(<circle cx=")" << num(sx(s.time_at(k) / 3600.0)) << R"(" cy=")" << num(sy(s[k])) << R"(" r="2.5"/>)";
      o << "</g>\n";
    } else {
      o << R"(<polyline fill="none" stroke=")" << p.color << R"(" stroke-width="1.4")"
        << (p.dashed ? R"( stroke-dasharray="5,3")" : "") << R"( points=")";
      for (Index k = 0; k < s.size(); ++k) o << num(sx(s.time_at(k) / 3600.0)) << ',' << num(sy(s[k])) << ' ';
      o << "\"/>\n";
    }
  }

  double ly = top + 10;
  for (const auto& p : plot.series) {
    const double lx = left + w + 15;
    if (p.markers)
      o << R"(<circle cx=")" << num(lx + 10) << R"(" cy=")" << num(ly) << R"(" r="3" fill=")" << p.color << R"("/>)";
    else
      o << R"(<line x1=")" << num(lx) << R"(" x2=")" << num(lx + 20) << R"(" y1=")" << num(ly) << R"(" y2=")"
        << num(ly) << R"(" stroke=")" << p.color << R"(" stroke-width="2")"
        << (p.dashed ? R"( stroke-dasharray="5,3")" : "") << "/>";
    o << R"(<text x=")" << num(lx + 26) << R"(" y=")" << num(ly + 4) << "\">" << escape(p.label) << "</text>\n";
    ly += 18;
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const OverlayPlot& plot) {
  const std::string text = render_svg(plot);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write plot " + path.string());
  out << text;
}

}  // namespace tssr::cli
