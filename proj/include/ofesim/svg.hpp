#pragma once

#include <map>
#include <string>
#include <vector>

#include "ofesim/metrics.hpp"

namespace ofesim {

/// Standalone 800 x 600 SVG documents with no external assets.

struct BoxplotPanel {
    std::string title;
    std::vector<BoxplotStats> boxes;  ///< drawn left to right, labelled by group
};

std::string boxplot_svg(const std::string& title, const std::vector<BoxplotPanel>& panels);

struct HistogramPanel {
    std::string title;
    std::map<int, std::size_t> bins;
};

/// Panels stacked vertically, bins over [lower, upper].
std::string histogram_svg(const std::string& title, const std::vector<HistogramPanel>& panels, int lower, int upper);

}  // namespace ofesim
