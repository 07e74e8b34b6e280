#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "efpp/experiment.hpp"

namespace efpp {

namespace {

struct Series {
  std::vector<double> x, y;
  std::string label;
};

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 50;

struct Axes {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  void fit(const std::vector<Series>& series) {
    bool first = true;
    for (const Series& s : series) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (first) {
          x_min = x_max = s.x[i];
          y_min = y_max = s.y[i];
          first = false;
        } else {
          x_min = std::min(x_min, s.x[i]);
          x_max = std::max(x_max, s.x[i]);
          y_min = std::min(y_min, s.y[i]);
          y_max = std::max(y_max, s.y[i]);
        }
      }
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  double px(double x) const {
    return kMarginLeft + (x - x_min) / (x_max - x_min) * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    return kHeight - kMarginBottom -
           (y - y_min) / (y_max - y_min) * (kHeight - kMarginTop - kMarginBottom);
  }
};

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_svg(const std::string& path, const std::string& title,
               const std::vector<Series>& series) {
  Axes axes;
  axes.fit(series);
  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "'>\n";
  out << "<!-- generated by " << kCodeVersion << " -->\n";
  for (const Series& s : series) {
    out << "<!-- data " << s.label << ":";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << ' ' << format_double(s.x[i]) << '/' << format_double(s.y[i]);
    }
    out << " -->\n";
  }
  out << "<rect x='0' y='0' width='" << kWidth << "' height='" << kHeight
      << "' fill='white'/>\n";
  out << "<line x1='" << kMarginLeft << "' y1='" << kHeight - kMarginBottom << "' x2='"
      << kWidth - kMarginRight << "' y2='" << kHeight - kMarginBottom
      << "' stroke='black'/>\n";
  out << "<line x1='" << kMarginLeft << "' y1='" << kMarginTop << "' x2='" << kMarginLeft
      << "' y2='" << kHeight - kMarginBottom << "' stroke='black'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
  // Axis extents.
  out << "<text x='" << kMarginLeft << "' y='" << kHeight - kMarginBottom + 18
      << "' font-size='10'>" << format_double(axes.x_min) << "</text>\n";
  out << "<text x='" << kWidth - kMarginRight << "' y='" << kHeight - kMarginBottom + 18
      << "' text-anchor='end' font-size='10'>" << format_double(axes.x_max) << "</text>\n";
  out << "<text x='" << kMarginLeft - 6 << "' y='" << kHeight - kMarginBottom
      << "' text-anchor='end' font-size='10'>" << format_double(axes.y_min) << "</text>\n";
  out << "<text x='" << kMarginLeft - 6 << "' y='" << kMarginTop + 4
      << "' text-anchor='end' font-size='10'>" << format_double(axes.y_max) << "</text>\n";

  const std::array<const char*, 6> colors = {"#1f6fb2", "#d1495b", "#3a7d44",
                                             "#8e44ad", "#e67e22", "#555555"};
  int ci = 0;
  double legend_y = kMarginTop + 14;
  for (const Series& s : series) {
    const char* color = colors[static_cast<std::size_t>(ci % 6)];
    ++ci;
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) pts << ' ';
      pts << coord(axes.px(s.x[i])) << ',' << coord(axes.py(s.y[i]));
    }
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='"
        << pts.str() << "'/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<circle cx='" << coord(axes.px(s.x[i])) << "' cy='" << coord(axes.py(s.y[i]))
          << "' r='2.5' fill='" << color << "'/>\n";
    }
    out << "<text x='" << kWidth - kMarginRight - 4 << "' y='" << legend_y
        << "' text-anchor='end' font-size='11' fill='" << color << "'>" << s.label
        << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir) {
  const std::vector<ResultRow> rows = read_result_csv(csv_path);
  std::vector<std::string> written;
  if (rows.empty()) {
    std::cerr << "emit_plots: results CSV has no data rows; nothing to plot\n";
    return written;
  }

  // Group value-vs-n series per statistic.
  std::map<std::string, Series> by_stat;
  std::map<double, Series> tail_curves;
  for (const ResultRow& r : rows) {
    if (r.statistic == "tail_survival") {
      const auto pos = r.tags.find("logp=");
      if (pos == std::string::npos) {
        throw std::runtime_error("emit_plots: tail_survival row lacks logp tag");
      }
      Series& s = tail_curves[r.n];
      s.x.push_back(r.value);
      s.y.push_back(std::strtod(r.tags.c_str() + pos + 5, nullptr));
      s.label = "n=" + format_double(r.n);
      continue;
    }
    Series& s = by_stat[r.statistic];
    s.x.push_back(r.n);
    s.y.push_back(r.value);
    s.label = r.statistic;
  }

  for (auto& [stat, series] : by_stat) {
    std::vector<Series> plot{series};
    if (stat.rfind("var_", 0) == 0 && !series.x.empty()) {
      // Reference curves anchored exactly at the first data point.
      const double n0 = series.x.front();
      const double y0 = series.y.front();
      Series lin{{}, {}, "c*n"};
      Series sub{{}, {}, "c*n/log n"};
      for (double n : series.x) {
        lin.x.push_back(n);
        lin.y.push_back(y0 * n / n0);
        sub.x.push_back(n);
        if (n0 > 1.0 && n > 1.0) {
          sub.y.push_back(y0 * (n / std::log(n)) / (n0 / std::log(n0)));
        } else {
          sub.y.push_back(y0);
        }
      }
      plot.push_back(lin);
      plot.push_back(sub);
    }
    const std::string path = out_dir + "/plot_" + stat + ".svg";
    write_svg(path, stat + " vs n", plot);
    written.push_back(path);
  }
  if (!tail_curves.empty()) {
    std::vector<Series> plot;
    for (auto& [n, s] : tail_curves) plot.push_back(s);
    const std::string path = out_dir + "/plot_tail_survival.svg";
    write_svg(path, "log survival of T'' samples", plot);
    written.push_back(path);
  }
  return written;
}

}  // namespace efpp
