// mgeqoe: propagate cislunar scenarios, compare trajectories and run
// Monte Carlo Gaussianity studies.
//
// Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "mgeqoe/mgeqoe.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

int report(const mgeqoe::Error& e) {
  std::cerr << "mgeqoe: " << e.what();
  if (std::isfinite(e.epoch())) std::cerr << " (epoch " << mgeqoe::format_double(e.epoch()) << ")";
  std::cerr << '\n';
  return mgeqoe::is_input_error(e.code()) ? kExitInput : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-GEqOE cislunar propagation and uncertainty analysis"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, file_a, file_b, out_file;
  double alpha = mgeqoe::kDefaultAlpha;
  std::vector<double> epochs_days;
  std::size_t hz_subsample = 0;
  std::size_t threads = 0;

  auto* propagate = app.add_subcommand("propagate", "Propagate a scenario in the requested coordinate kinds");
  propagate->add_option("scenario", scenario_path, "Scenario file")->required();
  propagate->add_option("-o,--output", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Position/velocity error series between two trajectories");
  compare->add_option("a", file_a, "First trajectory CSV")->required();
  compare->add_option("b", file_b, "Second trajectory CSV")->required();
  compare->add_option("-o,--output", out_file, "Output CSV")->required();

  auto* mc = app.add_subcommand("mc", "Monte Carlo ensembles and Henze-Zirkler series");
  mc->add_option("scenario", scenario_path, "Scenario file")->required();
  mc->add_option("-o,--output", out_dir, "Output directory")->required();
  mc->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  mc->add_option("--epochs", epochs_days, "Snapshot epochs, days after the scenario epoch")->delimiter(',');
  mc->add_option("--hz-subsample", hz_subsample, "Run the HZ test on every K-th grid epoch")->check(CLI::PositiveNumber);
  mc->add_option("--threads", threads, "Worker threads (0: hardware; MGEQOE_THREADS caps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*propagate) {
      const auto result = mgeqoe::propagate_scenario(mgeqoe::load_scenario(scenario_path));
      result.files.write_to(out_dir);
      if (result.errors) {
        double worst = 0.0;
        for (double e : result.errors->pos_err_km) worst = std::max(worst, e);
        std::cout << "max position difference between kinds: " << mgeqoe::format_double(worst) << " km\n";
      }
    } else if (*compare) {
      mgeqoe::write_error_series(out_file, mgeqoe::compare_files(file_a, file_b));
    } else if (*mc) {
      mgeqoe::McOptions opt;
      opt.alpha = alpha;
      opt.epochs_days = epochs_days;
      opt.hz_stride = hz_subsample;
      opt.workers = threads;
      const auto result = mgeqoe::montecarlo_scenario(mgeqoe::load_scenario(scenario_path), opt);
      result.files.write_to(out_dir);
      const double t_peri = result.setup.settings.output_grid[result.periapsis];
      for (std::size_t k = 0; k < result.hz.size(); ++k) {
        const auto& series = result.hz[k];
        for (std::size_t i = 0; i < series.epochs.size(); ++i) {
          if (series.epochs[i] != t_peri) continue;
          std::cout << mgeqoe::to_string(result.ensembles[k].kind) << " HZ p-value at periapsis: "
                    << mgeqoe::format_double(series.results[i].p_value) << '\n';
        }
      }
    }
  } catch (const mgeqoe::Error& e) {
    return report(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "mgeqoe: io: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "mgeqoe: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
