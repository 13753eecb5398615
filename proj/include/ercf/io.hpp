#pragma once

// File formats: crystal-field parameter documents (JSON), observed-level
// tables (CSV), fit reports (JSON), sweep traces and manifests (CSV), and the
// series summary table (CSV).

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ercf/cf_fitting.hpp"
#include "ercf/crystal_field.hpp"
#include "ercf/errors.hpp"
#include "ercf/spectra.hpp"
#include "ercf/units.hpp"

namespace ercf::io {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ParseError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

inline std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// ---------------------------------------------------------------- parameters

inline CfParams params_from_json(const Json& doc) {
  static const std::set<std::string> kKeys{"multiplet", "B20", "B40", "B44", "B60", "B64", "unit"};
  if (!doc.is_object()) throw ParseError("parameter document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw ParseError("parameter document: unknown key '" + key + "'");
  }
  for (const auto& key : kKeys) {
    if (!doc.contains(key)) throw ParseError("parameter document: missing key '" + key + "'");
  }
  try {
    const auto unit = units::parse_energy_unit(doc.at("unit").get<std::string>());
    const Multiplet m = Multiplet::parse(doc.at("multiplet").get<std::string>());
    std::array<double, 5> v{};
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& node = doc.at(CfParams::kNames[i]);
      if (!node.is_number()) throw ParseError(std::string("parameter document: ") + CfParams::kNames[i] + " is not a number");
      v[i] = units::to_wavenumber(node.get<double>(), unit);
    }
    return CfParams::from_values(m, v);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("parameter document: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ParseError(std::string("parameter document: ") + e.what());
  }
}

inline CfParams parse_params(const std::string& text) {
  try {
    return params_from_json(Json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("parameter document: ") + e.what());
  }
}

inline CfParams read_params(const std::filesystem::path& path) { return parse_params(read_file(path)); }

inline Json params_to_json(const CfParams& p) {
  Json doc;
  doc["multiplet"] = p.multiplet.label;
  const auto v = p.values();
  for (std::size_t i = 0; i < 5; ++i) doc[CfParams::kNames[i]] = v[i];
  doc["unit"] = "cm-1";
  return doc;
}

// ------------------------------------------------------------------- CSV

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  double x = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last) throw ParseError(where + ": not a number: '" + s + "'");
  return x;
}

/// Non-empty, non-comment lines split into fields, header removed.
inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& text,
                                                           const std::vector<std::string>& header,
                                                           const std::string& what) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ParseError(what + ": expected header '" + expected + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) throw ParseError(what + ": wrong number of fields in '" + line + "'");
    rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError(what + ": empty file");
  return rows;
}

// --------------------------------------------------------- observed levels

inline ObservedLevels parse_observed_levels(const std::string& text, const Multiplet& multiplet) {
  const auto rows = read_csv_rows(text, {"index", "energy_cm1", "present", "weight"}, "levels file");
  ObservedLevels out{multiplet, {}, {}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const double index = parse_number(f[0], "levels file index");
    if (index != static_cast<double>(r + 1)) throw ParseError("levels file: indices must run 1, 2, 3, ...");
    if (f[2] != "0" && f[2] != "1") throw ParseError("levels file: present must be 0 or 1");
    if (f[2] == "1") {
      out.energies.emplace_back(parse_number(f[1], "levels file energy"));
    } else {
      out.energies.emplace_back(std::nullopt);
    }
    out.weights.push_back(f[3].empty() ? 1.0 : parse_number(f[3], "levels file weight"));
  }
  return out;
}

inline ObservedLevels read_observed_levels(const std::filesystem::path& path, const Multiplet& multiplet) {
  return parse_observed_levels(read_file(path), multiplet);
}

inline std::string observed_levels_to_csv(const ObservedLevels& obs) {
  std::string out = "index,energy_cm1,present,weight\n";
  for (std::size_t i = 0; i < obs.energies.size(); ++i) {
    out += std::to_string(i + 1) + "," + (obs.energies[i] ? format_double(*obs.energies[i]) : std::string("")) + "," +
           (obs.energies[i] ? "1" : "0") + "," + format_double(obs.weight(i)) + "\n";
  }
  return out;
}

// ------------------------------------------------------------- fit report

inline Json fit_report(const FitResult& fit) {
  Json doc = params_to_json(fit.params);
  doc["rms_cm1"] = fit.rms;
  doc["iterations"] = fit.iterations;
  doc["converged"] = fit.converged;
  doc["status"] = fit.status;
  Json levels = Json::array();
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
    levels.push_back({{"index", fit.level_index[i] + 1},
                      {"observed_cm1", fit.observed[i]},
                      {"predicted_cm1", fit.predicted[i]},
                      {"residual_cm1", fit.residuals[i]}});
  }
  doc["levels"] = levels;
  Json unc;
  for (std::size_t i = 0; i < 5; ++i) {
    const double u = fit.parameter_uncertainties[i];
    unc[CfParams::kNames[i]] = std::isfinite(u) ? Json(u) : Json(nullptr);
  }
  doc["uncertainties_approximate_cm1"] = unc;
  return doc;
}

// ------------------------------------------------------------------ traces

inline spectra::SweepTrace parse_trace(const std::string& text, double lambda_start, double v_sweep,
                                       const std::string& name = "trace") {
  std::istringstream in(text);
  std::string line;
  spectra::SweepTrace tr;
  tr.lambda_start = lambda_start;
  tr.v_sweep = v_sweep;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;  // any header line is accepted
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(name + ": expected time_s,voltage_v in '" + line + "'");
    tr.t.push_back(parse_number(split_csv_line(line.substr(0, comma)).at(0), name));
    tr.v.push_back(parse_number(split_csv_line(line.substr(comma + 1)).at(0), name));
  }
  return tr;
}

inline spectra::SweepTrace read_trace(const std::filesystem::path& path, double lambda_start, double v_sweep) {
  return parse_trace(read_file(path), lambda_start, v_sweep, path.string());
}

inline std::string trace_to_csv(const spectra::SweepTrace& tr) {
  std::string out = "time_s,voltage_v\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i) out += format_double(tr.t[i]) + "," + format_double(tr.v[i]) + "\n";
  return out;
}

struct SweepSettings {
  double lambda_start_nm = 0;
  double sweep_speed_nm_per_s = 0;
};

/// Sidecar document {"lambda_start_nm": ..., "sweep_speed_nm_per_s": ...}.
inline SweepSettings read_sweep_settings(const std::filesystem::path& path) {
  try {
    const Json doc = Json::parse(read_file(path));
    for (const auto& [key, _] : doc.items()) {
      if (key != "lambda_start_nm" && key != "sweep_speed_nm_per_s") {
        throw ParseError("sweep settings: unknown key '" + key + "'");
      }
    }
    return {doc.at("lambda_start_nm").get<double>(), doc.at("sweep_speed_nm_per_s").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sweep settings: ") + e.what());
  }
}

// ---------------------------------------------------------------- manifest

struct ManifestRow {
  std::string condition;
  std::string value;
  std::string trace_glob;
};

inline std::vector<ManifestRow> parse_manifest(const std::string& text) {
  std::vector<ManifestRow> out;
  for (auto& f : read_csv_rows(text, {"condition", "value", "trace_glob"}, "manifest")) {
    out.push_back({f[0], f[1], f[2]});
  }
  return out;
}

/// Sorted matches of a glob pattern, relative patterns resolved against base.
inline std::vector<std::filesystem::path> expand_glob(const std::string& pattern, const std::filesystem::path& base) {
  std::filesystem::path p(pattern);
  if (p.is_relative()) p = base / p;
  glob_t g{};
  std::vector<std::filesystem::path> out;
  if (::glob(p.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

/// Loads every manifest row; per-row load failures are kept for the summary.
inline std::vector<spectra::SeriesCondition> load_series(const std::filesystem::path& manifest_path,
                                                         const SweepSettings& settings) {
  const auto rows = parse_manifest(read_file(manifest_path));
  const auto base = manifest_path.parent_path();
  std::vector<spectra::SeriesCondition> out;
  for (const auto& row : rows) {
    spectra::SeriesCondition cond{row.condition, row.value, {}, {}};
    try {
      const auto files = expand_glob(row.trace_glob, base);
      if (files.empty()) throw ParseError("no files match '" + row.trace_glob + "'");
      for (const auto& f : files) cond.traces.push_back(read_trace(f, settings.lambda_start_nm, settings.sweep_speed_nm_per_s));
    } catch (const std::exception& e) {
      cond.traces.clear();
      cond.load_error = e.what();
    }
    out.push_back(std::move(cond));
  }
  return out;
}

// ------------------------------------------------------------ summary CSV

inline constexpr const char* kSummaryHeader =
    "condition,value,absorption,absorption_ci,central_nm,central_ci_nm,linewidth_pm,linewidth_ci_pm,n_sweeps,status";

inline std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline std::string summary_row(const spectra::SeriesRow& row) {
  std::string line = csv_safe(row.condition) + "," + csv_safe(row.value) + ",";
  if (row.result) {
    const auto& s = row.result->summary;
    line += format_double(s.absorption) + "," + format_double(s.absorption_ci) + "," +
            format_double(s.central_wavelength) + "," + format_double(s.central_ci) + "," +
            format_double(s.linewidth * 1e3) + "," + format_double(s.linewidth_ci * 1e3) + ",";
  } else {
    line += ",,,,,,";
  }
  line += std::to_string(row.n_sweeps) + "," + csv_safe(row.status);
  return line;
}

inline std::string summary_csv(const std::vector<spectra::SeriesRow>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) out += summary_row(r) + "\n";
  return out;
}

struct SummaryRecord {
  std::string condition, value;
  double absorption = 0, absorption_ci = 0, central_nm = 0, central_ci_nm = 0, linewidth_pm = 0, linewidth_ci_pm = 0;
  int n_sweeps = 0;
  std::string status;
};

inline std::vector<SummaryRecord> parse_summary_csv(const std::string& text) {
  std::vector<std::string> header;
  for (const auto& h : split_csv_line(kSummaryHeader)) header.push_back(h);
  std::vector<SummaryRecord> out;
  for (const auto& f : read_csv_rows(text, header, "summary")) {
    SummaryRecord r;
    r.condition = f[0];
    r.value = f[1];
    r.status = f[9];
    r.n_sweeps = static_cast<int>(parse_number(f[8], "summary n_sweeps"));
    if (r.status == "ok") {
      r.absorption = parse_number(f[2], "summary");
      r.absorption_ci = parse_number(f[3], "summary");
      r.central_nm = parse_number(f[4], "summary");
      r.central_ci_nm = parse_number(f[5], "summary");
      r.linewidth_pm = parse_number(f[6], "summary");
      r.linewidth_ci_pm = parse_number(f[7], "summary");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ercf::io
