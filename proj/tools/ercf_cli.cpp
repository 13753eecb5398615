// ercf: command-line front end for crystal-field levels, fits, parameter
// transfer between multiplets, and swept-laser absorption reduction.
//
// Exit codes: 0 success, 2 input or usage error, 3 numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ercf/ercf.hpp"

namespace fs = std::filesystem;
using namespace ercf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Config {
  std::string params;
  std::string levels;
  std::string multiplet;
  std::string unit = "cm-1";
  std::string out;
  std::string manifest;
  std::string sweep_meta;
  std::vector<std::string> traces;
  std::optional<double> lambda_start;
  std::optional<double> sweep_speed;
  std::size_t grid_points = spectra::kDefaultGridPoints;
  int seed_count = 1;
  int k = 2;
  std::string from = "4I15/2";
  std::string to = "4I13/2";
  double lambda1 = 0;
  double lambda2 = 0;
  double degeneracy_tol = kDefaultDegeneracyTol;
};

class Output {
public:
  explicit Output(std::string path) : path_(std::move(path)) {}
  std::ostringstream& stream() { return buf_; }
  void flush() {
    if (path_.empty()) {
      std::cout << buf_.str();
    } else {
      io::write_file_atomic(path_, buf_.str());
    }
  }

private:
  std::string path_;
  std::ostringstream buf_;
};

void echo(std::ostream& os, const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
  os << "# ercf " << command << "\n";
  for (const auto& [k, v] : kv) os << "# " << k << ": " << v << "\n";
}

io::SweepSettings sweep_settings(const Config& cfg) {
  io::SweepSettings s;
  if (!cfg.sweep_meta.empty()) s = io::read_sweep_settings(cfg.sweep_meta);
  if (cfg.lambda_start) s.lambda_start_nm = *cfg.lambda_start;
  if (cfg.sweep_speed) s.sweep_speed_nm_per_s = *cfg.sweep_speed;
  if (!(s.sweep_speed_nm_per_s > 0.0)) {
    throw ParseError("sweep speed missing: pass --sweep-speed or --sweep-meta");
  }
  if (!cfg.lambda_start && cfg.sweep_meta.empty()) {
    throw ParseError("start wavelength missing: pass --lambda-start or --sweep-meta");
  }
  return s;
}

io::Json sweep_config_json(const Config& cfg, const io::SweepSettings& s) {
  io::Json meta;
  meta["lambda_start_nm"] = s.lambda_start_nm;
  meta["sweep_speed_nm_per_s"] = s.sweep_speed_nm_per_s;
  meta["grid_points"] = cfg.grid_points;
  return meta;
}

int cmd_levels(const Config& cfg) {
  const auto unit = units::parse_energy_unit(cfg.unit);
  const CfParams params = io::read_params(cfg.params);
  const LevelSpectrum spectrum = predict_levels(params, cfg.degeneracy_tol);

  Output out(cfg.out);
  echo(out.stream(), "levels",
       {{"params", cfg.params}, {"multiplet", params.multiplet.label}, {"unit", units::unit_label(unit)},
        {"degeneracy_tol_cm1", io::format_double(cfg.degeneracy_tol)}});
  for (const auto& level : spectrum.levels) {
    out.stream() << io::format_fixed(units::from_wavenumber(level.energy, unit), 2) << " (×" << level.degeneracy
                 << ")\n";
  }
  out.flush();
  return kExitOk;
}

int cmd_fit(const Config& cfg) {
  const CfParams initial = io::read_params(cfg.params);
  Multiplet multiplet = initial.multiplet;
  if (!cfg.multiplet.empty()) {
    multiplet = Multiplet::parse(cfg.multiplet);
    if (!(multiplet == initial.multiplet)) throw ParseError("--multiplet disagrees with the initial parameter file");
  }
  if (cfg.seed_count < 1 || cfg.seed_count > 17) throw ParseError("--seed-count must be in 1..17");
  const ObservedLevels observed = io::read_observed_levels(cfg.levels, multiplet);

  FitResult fit;
  if (cfg.seed_count == 1) {
    fit = fit_cf_params(observed, initial);
  } else {
    std::vector<CfParams> seeds{initial};
    for (const auto& s : sign_pattern_seeds(multiplet, initial.values())) {
      if (static_cast<int>(seeds.size()) == cfg.seed_count) break;
      if (s.values() != initial.values()) seeds.push_back(s);
    }
    fit = multi_start_fit(observed, seeds);
  }

  std::ostream& os = std::cout;
  echo(os, "fit",
       {{"levels", cfg.levels}, {"params", cfg.params}, {"multiplet", multiplet.label},
        {"seed_count", std::to_string(cfg.seed_count)}});
  os << "rms_cm1 " << io::format_sig(fit.rms, 4) << "\n";
  os << "converged " << (fit.converged ? "true" : "false") << " (" << fit.status << ", " << fit.iterations
     << " iterations)\n";
  os << "index observed_cm1 predicted_cm1 residual_cm1\n";
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
    os << fit.level_index[i] + 1 << " " << io::format_fixed(fit.observed[i], 2) << " "
       << io::format_fixed(fit.predicted[i], 2) << " " << io::format_fixed(fit.residuals[i], 2) << "\n";
  }
  const auto v = fit.params.values();
  for (std::size_t i = 0; i < 5; ++i) {
    os << CfParams::kNames[i] << " " << io::format_sig(v[i], 4) << " +- "
       << io::format_sig(fit.parameter_uncertainties[i], 2) << " (approximate)\n";
  }

  if (!cfg.out.empty()) {
    io::Json report = io::fit_report(fit);
    report["config"] = {{"levels", cfg.levels}, {"params", cfg.params}, {"seed_count", cfg.seed_count}};
    io::write_file_atomic(cfg.out, report.dump(2) + "\n");
  }
  return fit.converged ? kExitOk : kExitNumeric;
}

int cmd_ratio(const Config& cfg) {
  const Multiplet from = Multiplet::parse(cfg.from), to = Multiplet::parse(cfg.to);
  const double r = parameter_ratio(cfg.k, from, to);
  Output out(cfg.out);
  echo(out.stream(), "ratio", {{"k", std::to_string(cfg.k)}, {"from", from.label}, {"to", to.label}});
  out.stream() << io::format_double(r) << "\n";
  out.flush();
  return kExitOk;
}

int cmd_scale(const Config& cfg) {
  if (cfg.multiplet.empty()) throw ParseError("scale needs --multiplet (target)");
  const CfParams params = io::read_params(cfg.params);
  const CfParams scaled = scale_params(params, Multiplet::parse(cfg.multiplet));
  Output out(cfg.out);
  out.stream() << io::params_to_json(scaled).dump(2) << "\n";
  out.flush();
  return kExitOk;
}

void write_summary(const Config& cfg, const std::vector<spectra::SeriesRow>& rows, const io::Json& meta) {
  Output out(cfg.out);
  out.stream() << io::summary_csv(rows);
  out.flush();
  if (!cfg.out.empty()) io::write_file_atomic(cfg.out + ".meta.json", meta.dump(2) + "\n");
}

int cmd_analyze(const Config& cfg) {
  const auto settings = sweep_settings(cfg);
  spectra::SeriesCondition cond{"traces", std::to_string(cfg.traces.size()), {}, {}};
  for (const auto& path : cfg.traces) {
    cond.traces.push_back(io::read_trace(path, settings.lambda_start_nm, settings.sweep_speed_nm_per_s));
  }
  spectra::ReductionOptions opt;
  opt.grid_points = cfg.grid_points;
  const auto rows = spectra::analyze_series({cond}, opt);

  io::Json meta{{"command", "analyze"}, {"traces", cfg.traces}};
  meta["sweep"] = sweep_config_json(cfg, settings);
  write_summary(cfg, rows, meta);
  if (rows.front().status != "ok") {
    std::cerr << "ercf analyze: " << rows.front().status << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_series(const Config& cfg) {
  const auto settings = sweep_settings(cfg);
  const auto conditions = io::load_series(cfg.manifest, settings);
  spectra::ReductionOptions opt;
  opt.grid_points = cfg.grid_points;
  const auto rows = spectra::analyze_series(conditions, opt);

  io::Json meta{{"command", "series"}, {"manifest", cfg.manifest}};
  meta["sweep"] = sweep_config_json(cfg, settings);
  write_summary(cfg, rows, meta);

  const bool all_failed = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.status != "ok"; });
  return all_failed ? kExitNumeric : kExitOk;
}

int cmd_splitting(const Config& cfg) {
  const auto unit = units::parse_energy_unit(cfg.unit);
  const double cm1 = spectra::splitting_from_wavelengths(cfg.lambda1, cfg.lambda2);
  Output out(cfg.out);
  echo(out.stream(), "splitting",
       {{"lambda1_nm", io::format_double(cfg.lambda1)}, {"lambda2_nm", io::format_double(cfg.lambda2)},
        {"unit", units::unit_label(unit)}});
  out.stream() << io::format_double(units::from_wavenumber(cm1, unit)) << "\n";
  out.flush();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Er3+ crystal-field levels, fits and swept-laser absorption analysis"};
  app.require_subcommand(1);
  Config cfg;

  const std::vector<std::string> energy_units{"cm-1", "meV"};

  auto* levels = app.add_subcommand("levels", "Diagonalize a crystal-field parameter set");
  levels->add_option("--params", cfg.params, "Parameter document (JSON)")->required()->check(CLI::ExistingFile);
  levels->add_option("--unit", cfg.unit, "Output energy unit")->check(CLI::IsMember(energy_units));
  levels->add_option("--degeneracy-tol", cfg.degeneracy_tol, "Degeneracy tolerance (cm-1)");
  levels->add_option("--out", cfg.out, "Write to file instead of stdout");

  auto* fit = app.add_subcommand("fit", "Fit crystal-field parameters to observed levels");
  fit->add_option("--levels", cfg.levels, "Observed levels (CSV)")->required()->check(CLI::ExistingFile);
  fit->add_option("--params", cfg.params, "Initial parameters (JSON)")->required()->check(CLI::ExistingFile);
  fit->add_option("--multiplet", cfg.multiplet, "Multiplet label, e.g. 4I15/2");
  fit->add_option("--seed-count", cfg.seed_count, "Multi-start seeds (1 = initial only)");
  fit->add_option("--out", cfg.out, "Fit report (JSON)");

  auto* ratio = app.add_subcommand("ratio", "Cross-multiplet parameter ratio B^to_kq / B^from_kq");
  ratio->add_option("--k", cfg.k, "Rank (2, 4 or 6)")->required();
  ratio->add_option("--from", cfg.from, "Source multiplet");
  ratio->add_option("--to", cfg.to, "Target multiplet");
  ratio->add_option("--out", cfg.out, "Write to file instead of stdout");

  auto* scale = app.add_subcommand("scale", "Transfer parameters to another multiplet");
  scale->add_option("--params", cfg.params, "Parameter document (JSON)")->required()->check(CLI::ExistingFile);
  scale->add_option("--multiplet", cfg.multiplet, "Target multiplet")->required();
  scale->add_option("--out", cfg.out, "Write to file instead of stdout");

  auto add_sweep_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lambda-start", cfg.lambda_start, "Start wavelength (nm)");
    cmd->add_option("--sweep-speed", cfg.sweep_speed, "Sweep speed (nm/s)");
    cmd->add_option("--sweep-meta", cfg.sweep_meta, "Sweep settings document (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--grid-points", cfg.grid_points, "Common wavelength grid size")->check(CLI::Range(2, 1'000'000'000));
    cmd->add_option("--out", cfg.out, "Summary CSV (stdout if omitted)");
  };

  auto* analyze = app.add_subcommand("analyze", "Reduce one set of repeat sweeps");
  analyze->add_option("traces", cfg.traces, "Trace CSV files")->required()->check(CLI::ExistingFile);
  add_sweep_flags(analyze);

  auto* series = app.add_subcommand("series", "Reduce every condition of a manifest");
  series->add_option("--manifest", cfg.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  add_sweep_flags(series);

  auto* splitting = app.add_subcommand("splitting", "Energy difference of two vacuum wavelengths");
  splitting->add_option("--lambda1", cfg.lambda1, "First wavelength (nm)")->required();
  splitting->add_option("--lambda2", cfg.lambda2, "Second wavelength (nm)")->required();
  splitting->add_option("--unit", cfg.unit, "Output energy unit")->check(CLI::IsMember(energy_units));
  splitting->add_option("--out", cfg.out, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (levels->parsed()) return cmd_levels(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (ratio->parsed()) return cmd_ratio(cfg);
    if (scale->parsed()) return cmd_scale(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (series->parsed()) return cmd_series(cfg);
    if (splitting->parsed()) return cmd_splitting(cfg);
  } catch (const NumericError& e) {
    std::cerr << "ercf: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NoDipError& e) {
    std::cerr << "ercf: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "ercf: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
