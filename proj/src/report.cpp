#include "pmpo/report.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace pmpo {

void write_run_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << "schema,iteration,score,metric,loss,accept_term,reject_term,kl_term,kl_estimate,param_norm\n";
  for (const auto& r : records) {
    out << kRunCsvSchema << ',' << r.iteration << ',' << format_double(r.score) << ',' << format_double(r.metric)
        << ',' << format_double(r.loss) << ',' << format_double(r.components.accept_term) << ','
        << format_double(r.components.reject_term) << ',' << format_double(r.components.kl_term) << ','
        << format_double(r.kl_estimate) << ',' << format_double(r.param_norm) << '\n';
  }
}

void write_em_csv(std::ostream& out, const EmTrajectory& trajectory) {
  out << "schema,iteration,expected_value,tv_change\n";
  for (std::size_t k = 0; k < trajectory.values.size(); ++k) {
    out << kEmCsvSchema << ',' << k << ',' << format_double(trajectory.values[k]) << ',';
    if (k > 0) out << format_double(trajectory.tv_changes[k - 1]);
    out << '\n';
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Quartiles quartiles(const std::vector<double>& values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::string SvgPlot::render() const {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 80, kRight = 200, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  auto usable = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      for (double v : {s.y[i], s.band_low.empty() ? s.y[i] : s.band_low[i],
                       s.band_high.empty() ? s.y[i] : s.band_high[i]}) {
        if (!usable(v)) continue;
        y_min = std::min(y_min, ty(v));
        y_max = std::max(y_max, ty(v));
      }
    }
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
  if (!std::isfinite(y_min)) y_min = 0, y_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_min -= 0.5, y_max += 0.5;
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double gx = px(fx);
    svg << "<line x1=\"" << gx << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << gx << "\" y2=\""
        << kTop + plot_h + 5 << "\" stroke=\"#444\"/>";
    svg << "<text x=\"" << gx << "\" y=\"" << kTop + plot_h + 20 << "\" text-anchor=\"middle\">" << fmt(fx)
        << "</text>\n";
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    const double gy = kTop + (1.0 - i / 5.0) * plot_h;
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << gy << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << gy
        << "\" stroke=\"#ddd\"/>";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
        << fmt(log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << kTop + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label + (log_y ? " (log scale)" : "")) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.band_low.empty() && s.band_low.size() == s.x.size()) {
      std::ostringstream pts;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (usable(s.band_high[i])) pts << px(s.x[i]) << ',' << py(s.band_high[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;)
        if (usable(s.band_low[i])) pts << px(s.x[i]) << ',' << py(s.band_low[i]) << ' ';
      svg << "<polygon points=\"" << pts.str() << "\" fill=\"" << color
          << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.y[i])) pts << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + plot_w + 35
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    svg << "<text x=\"" << kLeft + plot_w + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pmpo
