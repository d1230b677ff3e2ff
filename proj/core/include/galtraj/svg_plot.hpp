#ifndef GALTRAJ_SVG_PLOT_HPP_
#define GALTRAJ_SVG_PLOT_HPP_

#include <string>
#include <vector>

#include "galtraj/scenario.hpp"

namespace galtraj::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG images; enough for metric curves, error histograms and
// scenario snapshots.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

void write_histogram(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::vector<double>& values, int bins);

void write_scenario(const std::string& path, const world::Scenario& scenario);

}  // namespace galtraj::plot

#endif  // GALTRAJ_SVG_PLOT_HPP_
