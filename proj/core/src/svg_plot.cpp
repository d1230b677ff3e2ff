#include "galtraj/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "galtraj/errors.hpp"

namespace galtraj::plot {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMargin = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  static Range of(const std::vector<double>& vs) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : vs) r.expand(v);
    if (!(r.lo < r.hi)) {
      r.lo -= 1.0;
      r.hi += 1.0;
    }
    return r;
  }
};

double map_x(double v, const Range& r) {
  return kMargin + (v - r.lo) / (r.hi - r.lo) * (kWidth - 2 * kMargin);
}
double map_y(double v, const Range& r) {
  return kHeight - kMargin - (v - r.lo) / (r.hi - r.lo) * (kHeight - 2 * kMargin);
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
     << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='16' "
     << "font-family='sans-serif'>" << title << "</text>\n";
}

void axes(std::ostringstream& os, const std::string& x_label, const std::string& y_label,
          const Range& xr, const Range& yr) {
  os << "<line x1='" << kMargin << "' y1='" << kHeight - kMargin << "' x2='" << kWidth - kMargin
     << "' y2='" << kHeight - kMargin << "' stroke='black'/>\n"
     << "<line x1='" << kMargin << "' y1='" << kMargin << "' x2='" << kMargin << "' y2='"
     << kHeight - kMargin << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4;
    os << "<text x='" << map_x(fx, xr) << "' y='" << kHeight - kMargin + 18
       << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << fx << "</text>\n";
    os << "<text x='" << kMargin - 6 << "' y='" << map_y(fy, yr) + 4
       << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << fy << "</text>\n";
  }
  os << "<text x='" << kWidth / 2 << "' y='" << kHeight - 12
     << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << x_label
     << "</text>\n";
  os << "<text x='16' y='" << kHeight / 2
     << "' text-anchor='middle' font-size='13' font-family='sans-serif' transform='rotate(-90 16 "
     << kHeight / 2 << ")'>" << y_label << "</text>\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("svg: cannot open " + path);
  out << content;
  if (!out) throw DataError("svg: write failed for " + path);
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
  Range xr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Range yr = xr;
  for (const auto& s : series) {
    for (double v : s.x) xr.expand(v);
    for (double v : s.y) yr.expand(v);
  }
  if (!(xr.lo < xr.hi)) xr = {0.0, 1.0};
  if (!(yr.lo < yr.hi)) yr = {0.0, 1.0};

  std::ostringstream os;
  open_svg(os, title);
  axes(os, x_label, y_label, xr, yr);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << map_x(s.x[i], xr) << "," << map_y(s.y[i], yr) << " ";
    os << "'/>\n";
    os << "<text x='" << kWidth - kMargin + 4 << "' y='" << kMargin + 16 * si
       << "' font-size='12' font-family='sans-serif' fill='" << color << "'"
       << " text-anchor='end'>" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  write_file(path, os.str());
}

void write_histogram(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::vector<double>& values, int bins) {
  if (bins < 1) bins = 1;
  const Range xr = Range::of(values);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    int b = static_cast<int>((v - xr.lo) / (xr.hi - xr.lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  Range yr{0.0, *std::max_element(counts.begin(), counts.end())};
  if (!(yr.hi > 0.0)) yr.hi = 1.0;

  std::ostringstream os;
  open_svg(os, title);
  axes(os, x_label, "count", xr, yr);
  const double bw = (kWidth - 2.0 * kMargin) / bins;
  for (int b = 0; b < bins; ++b) {
    const double h = counts[static_cast<std::size_t>(b)] / yr.hi * (kHeight - 2.0 * kMargin);
    os << "<rect x='" << kMargin + b * bw << "' y='" << kHeight - kMargin - h << "' width='"
       << bw * 0.92 << "' height='" << h << "' fill='#1f77b4'/>\n";
  }
  os << "</svg>\n";
  write_file(path, os.str());
}

void write_scenario(const std::string& path, const world::Scenario& scenario) {
  geom::Aabb box = geom::bounding_box(scenario.map.drivable_area);
  const double span = std::max(box.hi.x() - box.lo.x(), box.hi.y() - box.lo.y());
  auto sx = [&](double x) {
    return kMargin + (x - box.lo.x()) / span * (kWidth - 2.0 * kMargin);
  };
  auto sy = [&](double y) {
    return kHeight - kMargin - (y - box.lo.y()) / span * (kHeight - 2.0 * kMargin);
  };

  std::ostringstream os;
  open_svg(os, "scenario " + std::to_string(scenario.scenario_id));
  os << "<polygon fill='#eeeeee' stroke='#999999' points='";
  for (const auto& p : scenario.map.drivable_area) os << sx(p.x()) << "," << sy(p.y()) << " ";
  os << "'/>\n";
  for (const auto& lane : scenario.map.lanes) {
    os << "<polyline fill='none' stroke='#bbbbbb' stroke-dasharray='4 3' points='";
    for (const auto& p : lane) os << sx(p.x()) << "," << sy(p.y()) << " ";
    os << "'/>\n";
  }
  for (std::size_t a = 0; a < scenario.agents.size(); ++a) {
    const auto& track = scenario.agents[a];
    const char* color = kPalette[a % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < track.positions.size(); ++i) {
      if (!track.valid_mask[i]) continue;
      os << sx(track.positions[i].x()) << "," << sy(track.positions[i].y()) << " ";
    }
    os << "'/>\n";
    const int now = world::AgentTrack::index_of(scenario.horizons, 0);
    os << "<circle cx='" << sx(track.positions[static_cast<std::size_t>(now)].x()) << "' cy='"
       << sy(track.positions[static_cast<std::size_t>(now)].y()) << "' r='4' fill='" << color
       << "'/>\n";
  }
  os << "</svg>\n";
  write_file(path, os.str());
}

}  // namespace galtraj::plot
