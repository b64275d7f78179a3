#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "train.hpp"

namespace gpi {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

RunSeries read_run_series(const std::string& run_dir) {
  const std::filesystem::path path = std::filesystem::path(run_dir) / "log.csv";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty log: " + path.string());
  if (header != kLogHeader)
    throw IoError("unexpected metric columns in " + path.string() + ": " +
                  header);
  const std::vector<std::string> cols = split(header, ',');
  int step_col = -1, ret_col = -1;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    if (cols[i] == "step") step_col = i;
    if (cols[i] == "mean_return") ret_col = i;
  }
  RunSeries s;
  std::string name = std::filesystem::path(run_dir).filename().string();
  const auto seed_pos = name.rfind("_s");
  s.label = seed_pos == std::string::npos ? name : name.substr(0, seed_pos);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    s.steps.push_back(std::stod(f[step_col]));
    s.returns.push_back(std::stod(f[ret_col]));
  }
  return s;
}

std::string plot_runs(const std::vector<std::string>& run_dirs,
                      const std::string& out_path) {
  if (run_dirs.empty()) throw ConfigError("plot: no run directories given");
  std::map<std::string, std::vector<RunSeries>> groups;
  for (const auto& dir : run_dirs) {
    RunSeries s = read_run_series(dir);
    auto& g = groups[s.label];
    if (!g.empty() && g.front().steps != s.steps)
      throw ConfigError("plot: runs in group " + s.label +
                        " have mismatched step grids");
    g.push_back(std::move(s));
  }

  // Mean and half standard error per group.
  struct Curve {
    std::string label;
    std::vector<double> x, mean, half_se;
  };
  std::vector<Curve> curves;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [label, runs] : groups) {
    Curve c;
    c.label = label;
    const size_t T = runs.front().steps.size();
    const size_t k = runs.size();
    for (size_t t = 0; t < T; ++t) {
      double m = 0.0;
      for (const auto& r : runs) m += r.returns[t];
      m /= k;
      double se = 0.0;
      if (k > 1) {
        double var = 0.0;
        for (const auto& r : runs) var += (r.returns[t] - m) * (r.returns[t] - m);
        var /= (k - 1);
        se = std::sqrt(var / k);
      }
      c.x.push_back(runs.front().steps[t]);
      c.mean.push_back(m);
      c.half_se.push_back(se / 2.0);
      xmin = std::min(xmin, c.x.back());
      xmax = std::max(xmax, c.x.back());
      ymin = std::min(ymin, m - se / 2.0);
      ymax = std::max(ymax, m + se / 2.0);
    }
    curves.push_back(std::move(c));
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;

  const double W = 720, H = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(H - mb) << "\" x2=\""
      << fmt(W - mr) << "\" y2=\"" << fmt(H - mb)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\""
      << fmt(ml) << "\" y2=\"" << fmt(H - mb) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << fmt(ml) << "\" y=\"" << fmt(H - mb + 20)
      << "\" font-size=\"12\">" << fmt(xmin) << "</text>\n";
  svg << "<text x=\"" << fmt(W - mr - 50) << "\" y=\"" << fmt(H - mb + 20)
      << "\" font-size=\"12\">" << fmt(xmax) << "</text>\n";
  svg << "<text x=\"5\" y=\"" << fmt(H - mb) << "\" font-size=\"12\">"
      << fmt(ymin) << "</text>\n";
  svg << "<text x=\"5\" y=\"" << fmt(mt + 10) << "\" font-size=\"12\">"
      << fmt(ymax) << "</text>\n";
  svg << "<text x=\"" << fmt(W / 2 - 20) << "\" y=\"" << fmt(H - 10)
      << "\" font-size=\"13\">steps</text>\n";

  int ci = 0;
  for (const auto& c : curves) {
    const char* color = colors[ci % 6];
    // Shaded band: forward along mean + half_se, back along mean - half_se.
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" "
        << "stroke=\"none\" points=\"";
    for (size_t t = 0; t < c.x.size(); ++t)
      svg << fmt(px(c.x[t])) << "," << fmt(py(c.mean[t] + c.half_se[t])) << " ";
    for (size_t t = c.x.size(); t-- > 0;)
      svg << fmt(px(c.x[t])) << "," << fmt(py(c.mean[t] - c.half_se[t])) << " ";
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t t = 0; t < c.x.size(); ++t)
      svg << fmt(px(c.x[t])) << "," << fmt(py(c.mean[t])) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << fmt(W - mr - 200) << "\" y=\""
        << fmt(mt + 15 + 16 * ci) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << c.label << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  out << svg.str();
  return out_path;
}

}  // namespace gpi
