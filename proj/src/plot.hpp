#ifndef GPI_PLOT_HPP_
#define GPI_PLOT_HPP_

#include <string>
#include <vector>

namespace gpi {

// One run's logged learning curve (step vs. mean return columns of log.csv).
struct RunSeries {
  std::string label;  // run directory name without the seed suffix
  std::vector<double> steps;
  std::vector<double> returns;
};

RunSeries read_run_series(const std::string& run_dir);

// Groups runs by label, draws one mean curve per group with half-standard-
// error shading across seeds, and writes a deterministic SVG. Runs in a
// group must share their step grid.
std::string plot_runs(const std::vector<std::string>& run_dirs,
                      const std::string& out_path);

}  // namespace gpi

#endif  // GPI_PLOT_HPP_
