#include "depthwatch/svg.hpp"

#include <algorithm>
#include <sstream>

#include "depthwatch/csvio.hpp"

namespace depthwatch {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 360;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 180;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* phase_color(Phase phase) {
  switch (phase) {
    case Phase::PhaseI: return "#2e8b57";              // green
    case Phase::PhaseII_InControl: return "#7b68ee";   // purple
    case Phase::PhaseII_OutOfControl: return "#d46a6a";  // red
    case Phase::Unlabeled: return "#999999";
  }
  return "#999999";
}

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::PhaseI: return "Phase I";
    case Phase::PhaseII_InControl: return "Phase II (in control)";
    case Phase::PhaseII_OutOfControl: return "Phase II (out of control)";
    case Phase::Unlabeled: return "Unlabeled";
  }
  return "";
}

}  // namespace

std::string render_control_chart(const std::vector<SignalRecord>& signals,
                                 const ChartConfig& config,
                                 const std::map<std::size_t, bool>& misclassified_by_index,
                                 const std::string& title) {
  double x_min = 0.0, x_max = 1.0;
  if (!signals.empty()) {
    x_min = static_cast<double>(signals.front().index);
    x_max = static_cast<double>(signals.back().index);
    for (const auto& s : signals) {
      x_min = std::min(x_min, static_cast<double>(s.index));
      x_max = std::max(x_max, static_cast<double>(s.index));
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
  }
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double index) {
    return kMarginLeft + plot_w * (index - x_min) / (x_max - x_min);
  };
  auto sy = [&](double stat) { return kMarginTop + plot_h * (1.0 - stat); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // axes
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(0.0) << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << sy(0.0)
      << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(0.0) << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << sy(1.0) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  for (double tick = 0.0; tick <= 1.0001; tick += 0.25) {
    out << "<text x=\"" << kMarginLeft - 34 << "\" y=\"" << sy(tick) + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(tick)
        << "</text>\n";
  }
  out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
      << kHeight - 14 << "\" font-family=\"sans-serif\" font-size=\"12\">stream index</text>\n";

  // control limit
  out << "<line class=\"lcl\" x1=\"" << kMarginLeft << "\" y1=\"" << sy(config.lcl) << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << sy(config.lcl)
      << "\" stroke=\"#222222\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
  out << "<text x=\"" << kWidth - kMarginRight + 6 << "\" y=\"" << sy(config.lcl) + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">LCL = " << format_double(config.lcl)
      << "</text>\n";

  for (const auto& s : signals) {
    const double cx = sx(static_cast<double>(s.index));
    const double cy = sy(std::clamp(s.statistic, 0.0, 1.0));
    out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3\" fill=\""
        << phase_color(s.phase) << '"';
    if (s.signal) out << " stroke=\"#8b0000\" stroke-width=\"2\"";
    out << "/>\n";
    const auto mis = misclassified_by_index.find(s.index);
    if (mis != misclassified_by_index.end() && mis->second) {
      out << "<path class=\"misclassified\" d=\"M" << cx - 5 << ' ' << cy - 5 << " L" << cx + 5
          << ' ' << cy + 5 << " M" << cx - 5 << ' ' << cy + 5 << " L" << cx + 5 << ' ' << cy - 5
          << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    }
  }

  // legend
  double ly = kMarginTop + 8;
  const double lx = kWidth - kMarginRight + 6;
  for (Phase phase : {Phase::PhaseI, Phase::PhaseII_InControl, Phase::PhaseII_OutOfControl}) {
    out << "<circle cx=\"" << lx + 6 << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
        << phase_color(phase) << "\"/>\n";
    out << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << phase_name(phase) << "</text>\n";
    ly += 18;
  }
  out << "<circle cx=\"" << lx + 6 << "\" cy=\"" << ly
      << "\" r=\"4\" fill=\"white\" stroke=\"#8b0000\" stroke-width=\"2\"/>\n";
  out << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">signal</text>\n";
  ly += 18;
  out << "<path d=\"M" << lx + 1 << ' ' << ly - 5 << " L" << lx + 11 << ' ' << ly + 5 << " M"
      << lx + 1 << ' ' << ly + 5 << " L" << lx + 11 << ' ' << ly - 5
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">misclassified</text>\n";

  out << "</svg>\n";
  return out.str();
}

}  // namespace depthwatch
