#pragma once
#include <string>
#include <vector>

#include "rmi/analysis.hpp"

namespace rmi::svgplot {

struct Series {
    std::string label;
    std::string color; // css color
    std::vector<double> x, y;
};

void plot_lines(const std::string& path, const std::vector<Series>& series,
                const std::string& title, const std::string& xlabel, const std::string& ylabel,
                const std::string& config_hash);

void plot_histogram(const std::string& path, const analysis::MetricSummary& s,
                    const std::string& title, const std::string& xlabel,
                    const std::string& config_hash);

void plot_boxplots(const std::string& path, const std::vector<analysis::MetricSummary>& cols,
                   const std::vector<std::string>& col_labels, const std::string& title,
                   const std::string& xlabel, const std::string& ylabel,
                   const std::string& config_hash);

} // namespace rmi::svgplot
