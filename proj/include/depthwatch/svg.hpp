#pragma once

#include <map>
#include <string>
#include <vector>

#include "depthwatch/charting.hpp"

namespace depthwatch {

// Control chart rendering: statistic vs. stream index, a dashed horizontal
// line at the LCL, points colored by phase, signals stroked dark red, and
// misclassified Phase II in-control points marked with a cross.
std::string render_control_chart(const std::vector<SignalRecord>& signals,
                                 const ChartConfig& config,
                                 const std::map<std::size_t, bool>& misclassified_by_index,
                                 const std::string& title);

}  // namespace depthwatch
