#include "CLI11.hpp"

#include "cdens/evaluation.hpp"
#include "cdens/version.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using cdens::EstimatorKind;
using cdens::ExampleId;
using cdens::RiskConfig;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string csv_num(double v) { return fmt("%g", v); }

const std::map<std::string, ExampleId>& example_names()
{
  static const std::map<std::string, ExampleId> m = {
    { "ex1", ExampleId::Ex1 },
    { "ex2", ExampleId::Ex2 },
    { "ex3", ExampleId::Ex3 },
    { "ex4", ExampleId::Ex4 },
  };
  return m;
}

std::string example_name(ExampleId id)
{
  for (const auto& [name, value] : example_names())
    if (value == id) return name;
  return "ex1";
}

std::string estimator_name(EstimatorKind kind)
{
  return kind == EstimatorKind::kernel ? "kernel" : "projection";
}

//! Shared flag set; `seen` tracks which flags the user actually passed so the
//! precedence defaults < config file < explicit flags holds.
struct CommonArgs {
  std::string example = "ex1";
  std::string estimator = "kernel";
  double x = 0.5;
  int n = 1000;
  int reps = 100;
  std::uint64_t seed = 20250819;
  std::string out = ".";
  std::string config_path;
  bool fx_known = false;
  bool strict_grid = false;
  bool clamp_nonneg = false;
  bool ex1_cauchy = false;

  CLI::App* cmd = nullptr;

  void attach(CLI::App* app)
  {
    cmd = app;
    app->add_option("--example", example, "Simulation example (ex1..ex4)")
        ->check(CLI::IsMember({ "ex1", "ex2", "ex3", "ex4" }));
    app->add_option("--estimator", estimator,
                    "Estimator family (kernel or projection)")
        ->check(CLI::IsMember({ "kernel", "projection" }));
    app->add_option("--x", x, "Estimation point x");
    app->add_option("--n", n, "Sample size per half");
    app->add_option("--reps", reps, "Monte Carlo replications");
    app->add_option("--seed", seed, "Base seed; replication r uses seed+r");
    app->add_option("--out", out, "Output directory");
    app->add_option("--config", config_path,
                    "Flat key=value config file applied before flags");
    app->add_flag("--fx-known", fx_known, "Use the exact design density");
    app->add_flag("--strict-grid", strict_grid,
                  "Literal theory grids with per-axis fallback");
    app->add_flag("--clamp-nonneg", clamp_nonneg,
                  "Clamp the estimate at zero before scoring");
    app->add_flag("--ex1-cauchy", ex1_cauchy,
                  "Example 1 variant with Cauchy noise");
  }

  bool seen(const std::string& flag) const { return cmd->count(flag) > 0; }
};

bool parse_bool(const std::string& key, const std::string& value)
{
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw UsageError("config: boolean key '" + key + "' got '" + value + "'");
}

//! Flat key=value overlay; '#' starts a comment, blank lines skipped.
void apply_config_file(const std::string& path, RiskConfig& cfg)
{
  std::ifstream is(path);
  if (!is) throw UsageError("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: line " + std::to_string(lineno) +
                       " is not key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "example") {
        const auto it = example_names().find(value);
        if (it == example_names().end())
          throw UsageError("config: unknown example '" + value + "'");
        cfg.example = it->second;
      } else if (key == "estimator") {
        if (value == "kernel") cfg.estimator = EstimatorKind::kernel;
        else if (value == "projection") cfg.estimator = EstimatorKind::projection;
        else throw UsageError("config: unknown estimator '" + value + "'");
      } else if (key == "x") cfg.x = std::stod(value);
      else if (key == "n") cfg.n = std::stoi(value);
      else if (key == "eta") cfg.eta = std::stod(value);
      else if (key == "fx_known") cfg.fx_known = parse_bool(key, value);
      else if (key == "reps") cfg.replications = std::stoi(value);
      else if (key == "seed") cfg.base_seed = std::stoull(value);
      else if (key == "quadrature_points") cfg.quadrature_points = std::stoi(value);
      else if (key == "strict_grid") cfg.strict_grid = parse_bool(key, value);
      else if (key == "clamp_nonneg") cfg.clamp_nonneg = parse_bool(key, value);
      else if (key == "ex1_cauchy") cfg.ex1_cauchy = parse_bool(key, value);
      else if (key == "grid_per_axis") cfg.grid_per_axis = std::stoi(value);
      else if (key == "basis_A") cfg.basis_A = std::stod(value);
      else if (key == "basis_r") cfg.basis_r = std::stoi(value);
      else if (key == "basis_r_y") cfg.basis_r_y = std::stoi(value);
      else if (key == "simplified_penalty")
        cfg.simplified_penalty = parse_bool(key, value);
      else if (key == "b_lo") cfg.b_lo = std::stod(value);
      else if (key == "b_hi") cfg.b_hi = std::stod(value);
      else throw UsageError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw UsageError("config: bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw UsageError("config: value out of range for '" + key + "'");
    }
  }
}

RiskConfig resolve_config(const CommonArgs& args)
{
  RiskConfig cfg;
  if (!args.config_path.empty()) apply_config_file(args.config_path, cfg);
  if (args.seen("--example")) cfg.example = example_names().at(args.example);
  if (args.seen("--estimator"))
    cfg.estimator = args.estimator == "projection" ? EstimatorKind::projection
                                                   : EstimatorKind::kernel;
  if (args.seen("--x")) cfg.x = args.x;
  if (args.seen("--n")) cfg.n = args.n;
  if (args.seen("--reps")) cfg.replications = args.reps;
  if (args.seen("--seed")) cfg.base_seed = args.seed;
  if (args.seen("--fx-known")) cfg.fx_known = args.fx_known;
  if (args.seen("--strict-grid")) cfg.strict_grid = args.strict_grid;
  if (args.seen("--clamp-nonneg")) cfg.clamp_nonneg = args.clamp_nonneg;
  if (args.seen("--ex1-cauchy")) cfg.ex1_cauchy = args.ex1_cauchy;
  return cfg;
}

//! Compute-first, write-last with temp-then-rename per file.
void write_atomic(const std::filesystem::path& final_path,
                  const std::string& content)
{
  std::filesystem::path tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << content;
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, final_path);
}

std::string manifest_text(const std::map<std::string, std::string>& entries)
{
  std::string out;
  for (const auto& [key, value] : entries) out += key + "=" + value + "\n";
  return out;
}

std::map<std::string, std::string> manifest_base(const RiskConfig& cfg,
                                                 const std::string& command)
{
  std::map<std::string, std::string> m;
  m["command"] = command;
  m["version"] = cdens::version;
  m["seed"] = std::to_string(cfg.base_seed);
  m["reps"] = std::to_string(cfg.replications);
  m["quadrature_points"] = std::to_string(cfg.quadrature_points);
  m["strict_grid"] = cfg.strict_grid ? "1" : "0";
  m["clamp_nonneg"] = cfg.clamp_nonneg ? "1" : "0";
  m["ex1_cauchy"] = cfg.ex1_cauchy ? "1" : "0";
  m["grid_per_axis"] = std::to_string(cfg.grid_per_axis);
  m["basis_A"] = fmt("%.10g", cfg.basis_A);
  m["basis_r"] = std::to_string(cfg.basis_r);
  m["basis_r_y"] = std::to_string(cfg.basis_r_y);
  m["simplified_penalty"] = cfg.simplified_penalty ? "1" : "0";
  if (cfg.b_hi > cfg.b_lo) {
    m["b_lo"] = fmt("%.10g", cfg.b_lo);
    m["b_hi"] = fmt("%.10g", cfg.b_hi);
  }
  return m;
}

void add_cell_keys(std::map<std::string, std::string>& m, const RiskConfig& cfg)
{
  m["example"] = example_name(cfg.example);
  m["estimator"] = estimator_name(cfg.estimator);
  m["x"] = fmt("%.10g", cfg.x);
  m["n"] = std::to_string(cfg.n);
  m["eta"] = fmt("%.10g", cfg.eta);
  m["fx_known"] = cfg.fx_known ? "1" : "0";
}

std::string csv_row(const cdens::RiskReport& report)
{
  const RiskConfig& cfg = report.config;
  std::ostringstream os;
  os << example_name(cfg.example) << ',' << estimator_name(cfg.estimator)
     << ',' << csv_num(cfg.x) << ',' << cfg.n << ',' << csv_num(cfg.eta) << ','
     << (cfg.fx_known ? 1 : 0) << ',' << csv_num(report.mse_mean) << ','
     << csv_num(report.mse_stderr) << ',' << report.per_replication.size()
     << ',' << cfg.base_seed << '\n';
  return os.str();
}

constexpr const char* csv_header =
    "example,estimator,x,n,eta,fx_known,mse_mean,mse_stderr,N,base_seed\n";

struct PresetSpec {
  ExampleId example;
  EstimatorKind estimator;
  std::vector<double> xs;
  std::vector<bool> fx_modes; // iterated in order (known first when present)
};

const std::map<std::string, PresetSpec>& presets()
{
  static const std::map<std::string, PresetSpec> m = {
    { "table1", { ExampleId::Ex1, EstimatorKind::kernel, { 0.5 }, { true, false } } },
    { "table2", { ExampleId::Ex1, EstimatorKind::projection, { 0.5 }, { false } } },
    { "table3", { ExampleId::Ex2, EstimatorKind::kernel, { 0.5 }, { true, false } } },
    { "table4", { ExampleId::Ex2, EstimatorKind::projection, { 0.5 }, { false } } },
    { "table5", { ExampleId::Ex3, EstimatorKind::kernel, { 0.0, 0.36, 1.0 }, { false } } },
    { "table6", { ExampleId::Ex3, EstimatorKind::projection, { 0.0, 0.36, 1.0 }, { false } } },
    { "table7", { ExampleId::Ex4, EstimatorKind::kernel, { 0.0, 0.36, 1.0 }, { false } } },
    { "table8", { ExampleId::Ex4, EstimatorKind::projection, { 0.0, 0.36, 1.0 }, { false } } },
  };
  return m;
}

const std::vector<int> preset_ns = { 250, 500, 1000 };
const std::vector<double> preset_etas = { -0.2, 0.5, 1.0, 2.0, 3.0 };

int cmd_estimate(const CommonArgs& args, double eta, bool with_truth)
{
  RiskConfig cfg = resolve_config(args);
  if (args.seen("--eta")) cfg.eta = eta;
  const cdens::EstimateResult result = cdens::estimate_once(cfg);

  std::ostringstream curve;
  curve << "y\tfhat";
  if (with_truth) curve << "\ttruth";
  curve << '\n';
  const int grid_points = 513;
  for (int j = 0; j < grid_points; ++j) {
    const double y = result.range_lo +
                     j * (result.range_hi - result.range_lo) / (grid_points - 1);
    curve << fmt("%.10g", y) << '\t' << fmt("%.10g", result.curve.eval(y));
    if (with_truth)
      curve << '\t'
            << fmt("%.10g", cdens::true_conditional_density(
                                cfg.example, cfg.x, y, cfg.ex1_cauchy));
    curve << '\n';
  }

  std::ostringstream trace;
  trace << "{\n  \"chosen\": \"" << result.trace.chosen << "\",\n"
        << "  \"mse\": " << fmt("%.10g", result.mse_value) << ",\n"
        << "  \"records\": [\n";
  for (std::size_t i = 0; i < result.trace.records.size(); ++i) {
    const auto& rec = result.trace.records[i];
    trace << "    {\"id\": \"" << rec.id << "\", \"sigma\": "
          << fmt("%.10g", rec.sigma) << ", \"A\": " << fmt("%.10g", rec.a_value)
          << ", \"objective\": " << fmt("%.10g", rec.objective) << "}"
          << (i + 1 < result.trace.records.size() ? "," : "") << '\n';
  }
  trace << "  ]\n}\n";

  auto manifest = manifest_base(cfg, "estimate");
  add_cell_keys(manifest, cfg);
  manifest["truth_column"] = with_truth ? "1" : "0";

  const std::filesystem::path out_dir(args.out);
  std::filesystem::create_directories(out_dir);
  write_atomic(out_dir / "curve.tsv", curve.str());
  write_atomic(out_dir / "trace.txt", trace.str());
  write_atomic(out_dir / "manifest.txt", manifest_text(manifest));
  return 0;
}

int cmd_table(const CommonArgs& args, double eta, const std::string& preset)
{
  RiskConfig base = resolve_config(args);
  if (args.seen("--eta")) base.eta = eta;
  std::string csv = csv_header;

  if (!preset.empty()) {
    const auto it = presets().find(preset);
    if (it == presets().end())
      throw UsageError("unknown preset '" + preset + "'");
    const PresetSpec& spec = it->second;
    for (const bool fx : spec.fx_modes)
      for (const int n : preset_ns)
        for (const double x : spec.xs) {
          RiskConfig cfg = base;
          cfg.example = spec.example;
          cfg.estimator = spec.estimator;
          cfg.fx_known = fx;
          cfg.n = n;
          cfg.x = x;
          const auto reports = cdens::run_cells_eta_batch(cfg, preset_etas);
          for (const auto& report : reports) csv += csv_row(report);
        }
  } else {
    csv += csv_row(cdens::run_cell(base));
  }

  auto manifest = manifest_base(base, "table");
  if (!preset.empty()) manifest["preset"] = preset;
  else add_cell_keys(manifest, base);

  const std::filesystem::path out_dir(args.out);
  std::filesystem::create_directories(out_dir);
  write_atomic(out_dir / "table.csv", csv);
  write_atomic(out_dir / "manifest.txt", manifest_text(manifest));
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& eta_list)
{
  RiskConfig cfg = resolve_config(args);
  std::vector<double> etas;
  std::stringstream ss(eta_list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      etas.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw UsageError("sweep: bad eta '" + token + "'");
    }
  }
  if (etas.empty()) throw UsageError("sweep: empty eta list");
  std::sort(etas.begin(), etas.end());
  etas.erase(std::unique(etas.begin(), etas.end()), etas.end());

  const auto reports = cdens::run_cells_eta_batch(cfg, etas);
  std::string csv = "eta,mse_mean\n";
  for (const auto& report : reports) {
    csv += csv_num(report.config.eta);
    csv += ',';
    csv += csv_num(report.mse_mean);
    csv += '\n';
  }

  auto manifest = manifest_base(cfg, "sweep");
  add_cell_keys(manifest, cfg);
  std::string joined;
  for (std::size_t i = 0; i < etas.size(); ++i)
    joined += (i ? "," : "") + std::string(fmt("%.10g", etas[i]));
  manifest["eta"] = joined;

  const std::filesystem::path out_dir(args.out);
  std::filesystem::create_directories(out_dir);
  write_atomic(out_dir / "sweep.csv", csv);
  write_atomic(out_dir / "manifest.txt", manifest_text(manifest));
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Adaptive pointwise conditional density estimation" };
  app.require_subcommand(1);

  CLI::App* est = app.add_subcommand(
      "estimate", "Fit once and export the estimated y-section");
  CLI::App* tab = app.add_subcommand(
      "table", "Monte Carlo MSE table (single cell or preset)");
  CLI::App* swp =
      app.add_subcommand("sweep", "MSE versus eta for one cell");

  CommonArgs est_args, tab_args, swp_args;
  est_args.attach(est);
  tab_args.attach(tab);
  swp_args.attach(swp);

  double est_eta = 1.0, tab_eta = 1.0;
  bool with_truth = false;
  std::string preset, sweep_etas = "1";
  est->add_option("--eta", est_eta, "Selection tuning parameter");
  est->add_flag("--truth", with_truth, "Add the exact density column");
  tab->add_option("--eta", tab_eta, "Selection tuning parameter");
  tab->add_option("--preset", preset,
                  "Benchmark table preset (table1..table8)");
  swp->add_option("--eta", sweep_etas,
                  "Comma-separated eta values, e.g. -0.2,0.5,1,2,3");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) return cmd_estimate(est_args, est_eta, with_truth);
    if (tab->parsed()) return cmd_table(tab_args, tab_eta, preset);
    return cmd_sweep(swp_args, sweep_etas);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
