// Copyright 2026 The kiv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kiv: fit, simulate and study kernel NPIV estimators from the command line.
//
// Exit codes: 0 success, 1 invalid input (flags, config, files), 2 numerical
// failure (including filters-check rows that miss their expected outcome).

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kiv/config.hpp"
#include "kiv/kiv.hpp"

namespace fs = std::filesystem;
using kiv::config::json;
using kiv::io::fmt;

namespace {

struct Common {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

json resolve(const std::string& sub, const Common& c) {
  std::optional<fs::path> file;
  if (c.config_file) file = fs::path(*c.config_file);
  json cfg = kiv::config::resolve(sub, file, c.sets);
  if (c.output_dir) cfg["experiment"]["output_dir"] = *c.output_dir;
  if (c.seed) {
    cfg["experiment"]["seed"] = *c.seed;
    cfg["scenario"]["seed"] = *c.seed;
  }
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = kiv::io::open_out(path);
  out << j.dump(2) << "\n";
}

void write_manifest(const fs::path& dir, const std::string& sub, const json& cfg) {
  write_json(dir / "manifest.json",
             {{"tool", "kiv"}, {"version", kiv::config::kVersion}, {"subcommand", sub}, {"config", cfg}});
}

// ---------------------------------------------------------------------------

void print_rate_row(std::ostream& out, const kiv::RateParams& p) {
  const kiv::RateResult r = kiv::exponent_and_schedule(p);
  out << fmt(p.a) << "\t" << r.case_label() << "\t" << fmt(r.lambda_exponent) << "\t"
      << fmt(r.squared_error_exponent) << "\t" << fmt(r.xi_exponent_in_m) << "\t"
      << fmt(kiv::lower_bound_exponent(p)) << "\n";
}

json theory_json(const kiv::RateParams& p) {
  const kiv::RateResult r = kiv::exponent_and_schedule(p);
  return {{"case", r.case_label()},
          {"lambda_exponent", r.lambda_exponent},
          {"squared_error_exponent", r.squared_error_exponent},
          {"xi_exponent_in_m", r.xi_exponent_in_m},
          {"lower_bound_exponent", kiv::lower_bound_exponent(p)}};
}

int run_theory(const std::string& sub, const json& cfg, const kiv::DiscreteInstance* inst) {
  const kiv::RateParams p = kiv::config::rate_params_from(cfg, inst);
  const json t = theory_json(p);
  std::cout << "case " << t["case"].get<std::string>() << "\n"
            << "lambda_exponent " << fmt(t["lambda_exponent"].get<double>()) << "\n"
            << "squared_error_exponent " << fmt(t["squared_error_exponent"].get<double>()) << "\n"
            << "xi_exponent_in_m " << fmt(t["xi_exponent_in_m"].get<double>()) << "\n"
            << "lower_bound_exponent " << fmt(t["lower_bound_exponent"].get<double>()) << "\n";
  json table = json::array();
  const auto sweep = kiv::config::get<std::vector<double>>(cfg.at("experiment"), "a_sweep", "experiment");
  if (!sweep.empty()) {
    std::cout << "\na\tcase\tlambda_exp\terror_exp\txi_exp\tlower_bound\n";
    for (double a : sweep) {
      kiv::RateParams q = p;
      q.a = a;
      print_rate_row(std::cout, q);
      json row = theory_json(q);
      row["a"] = a;
      table.push_back(row);
    }
  }
  const fs::path dir = kiv::config::output_dir(cfg);
  write_json(dir / "theory.json", {{"params", kiv::config::rate_params_json(p)}, {"result", t}, {"sweep", table}});
  write_manifest(dir, sub, cfg);
  return 0;
}

// ---------------------------------------------------------------------------

int run_filters_check(const json& cfg) {
  const json& f = cfg.at("filters_check");
  using kiv::config::get;
  const double kappa = get<double>(f, "kappa_sq", "filters_check");
  const auto xi_grid = kiv::log_grid(get<double>(f, "xi_min", "filters_check"), get<double>(f, "xi_max", "filters_check"),
                                     get<int>(f, "xi_points", "filters_check"));
  const int nx = get<int>(f, "x_points", "filters_check");
  const int nt = get<int>(f, "theta_points", "filters_check");
  const double probe = get<double>(f, "rho_probe", "filters_check");
  const int nu = get<int>(f, "iterated_nu", "filters_check");

  struct Row {
    kiv::FilterSpec filter;
    double rho;
  };
  std::vector<Row> rows{{kiv::FilterSpec::tikhonov(), 1.0},
                        {kiv::FilterSpec::landweber(get<double>(f, "landweber_tau", "filters_check")), probe},
                        {kiv::FilterSpec::pcr(), probe},
                        {kiv::FilterSpec::iterated_tikhonov(nu), static_cast<double>(nu)},
                        {kiv::FilterSpec::gradient_flow(), probe}};
  if (auto sat = kiv::config::get_opt<double>(f, "saturation_probe", "filters_check"))
    rows.push_back({kiv::FilterSpec::tikhonov(), *sat});

  std::ostringstream csv;
  csv << "filter,rho,qualification,E,omega,cond1_max,cond2_max,pass,expected_pass\n";
  std::cout << std::left << std::setw(28) << "filter" << std::setw(8) << "rho" << std::setw(8) << "E" << std::setw(14)
            << "omega" << std::setw(14) << "cond1_max" << std::setw(14) << "cond2_max" << std::setw(6) << "pass"
            << "expected\n";
  bool all_as_expected = true;
  for (const Row& row : rows) {
    const kiv::FilterCheckReport r = kiv::verify_filter_conditions(row.filter, kappa, xi_grid, nx, nt, row.rho);
    all_as_expected = all_as_expected && r.pass == r.expected_pass;
    std::ostringstream om, c1, c2;
    om << std::setprecision(6) << r.omega;
    c1 << std::setprecision(6) << r.cond1_max;
    c2 << std::setprecision(6) << r.cond2_max;
    std::cout << std::setw(28) << r.filter << std::setw(8) << fmt(r.rho_probe) << std::setw(8) << fmt(r.const_E)
              << std::setw(14) << om.str() << std::setw(14) << c1.str() << std::setw(14) << c2.str()
              << std::setw(6) << (r.pass ? "yes" : "no") << (r.expected_pass ? "pass" : "fail") << "\n";
    csv << r.filter << "," << fmt(r.rho_probe) << "," << fmt(r.qualification) << "," << fmt(r.const_E) << ","
        << fmt(r.omega) << "," << fmt(r.cond1_max) << "," << fmt(r.cond2_max) << "," << (r.pass ? 1 : 0) << ","
        << (r.expected_pass ? 1 : 0) << "\n";
  }
  const fs::path dir = kiv::config::output_dir(cfg);
  kiv::io::open_out(dir / "filters_check.csv") << csv.str();
  write_manifest(dir, "filters-check", cfg);
  if (!all_as_expected) {
    std::cerr << "kiv: filters-check: some filter did not match its expected outcome\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_rates(const json& cfg, bool theory_only) {
  const kiv::DiscreteInstance inst = kiv::config::instance_from(cfg);
  if (theory_only) return run_theory("rates", cfg, &inst);
  const kiv::RateStudyConfig sc = kiv::config::rate_study_from(cfg, inst);
  const kiv::RateReport rep = kiv::run_rate_study(inst, sc);
  const double tol = 0.25;
  const double diff = std::abs(rep.fit.slope - rep.theory_slope);
  const bool pass = diff <= tol && rep.jensen_violations == 0;
  const fs::path dir = kiv::config::output_dir(cfg);
  {
    std::ofstream out = kiv::io::open_out(dir / "rates.csv");
    kiv::io::write_rates_csv(out, rep);
  }
  write_json(dir / "rates_summary.json",
             {{"study", "rates"},
              {"params", kiv::config::rate_params_json(sc.params)},
              {"slopes",
               {{"fitted", rep.fit.slope},
                {"stderr", rep.fit.stderr_},
                {"theory", rep.theory_slope},
                {"abs_diff", diff},
                {"case", rep.theory.case_label()}}},
              {"mean_mse", rep.mean_mse()},
              {"jensen_violations", rep.jensen_violations},
              {"tolerances", {{"slope", tol}, {"jensen", kiv::kJensenTol}}},
              {"pass", pass}});
  write_manifest(dir, "rates", cfg);
  std::cout << "case " << rep.theory.case_label() << "  theory slope " << fmt(rep.theory_slope) << "  fitted slope "
            << fmt(rep.fit.slope) << " (se " << fmt(rep.fit.stderr_) << ")  " << (pass ? "PASS" : "FAIL") << "\n";
  return 0;
}

int run_minnorm(const json& cfg) {
  const kiv::DiscreteInstance inst = kiv::config::instance_from(cfg);
  const kiv::MinNormStudyConfig sc = kiv::config::minnorm_study_from(cfg);
  const kiv::MinNormReport rep = kiv::run_minnorm_study(inst, sc);
  const double ratio = rep.err_to_hstar.back() / rep.err_to_hstar.front();
  const bool pass = ratio < 0.5 && rep.err_to_h0.back() >= 0.5 * rep.floor && rep.jensen_violations == 0;
  const fs::path dir = kiv::config::output_dir(cfg);
  {
    std::ofstream out = kiv::io::open_out(dir / "minnorm.csv");
    kiv::io::write_minnorm_csv(out, rep);
  }
  write_json(dir / "minnorm_summary.json",
             {{"study", "minnorm"},
              {"params", {{"sizes", sc.sizes}, {"replicates", sc.replicates}, {"filter", sc.filter.name()}}},
              {"slopes", {{"hstar_ratio_last_first", ratio}}},
              {"err_to_hstar", rep.err_to_hstar},
              {"err_to_h0", rep.err_to_h0},
              {"floor", rep.floor},
              {"jensen_violations", rep.jensen_violations},
              {"tolerances", {{"hstar_ratio", 0.5}, {"plateau_fraction", 0.5}, {"jensen", kiv::kJensenTol}}},
              {"pass", pass}});
  write_manifest(dir, "minnorm", cfg);
  std::cout << "floor " << fmt(rep.floor) << "\n";
  for (std::size_t g = 0; g < sc.sizes.size(); ++g)
    std::cout << "size " << sc.sizes[g] << "  err_to_hstar " << fmt(rep.err_to_hstar[g]) << "  err_to_h0 "
              << fmt(rep.err_to_h0[g]) << "\n";
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return 0;
}

int run_saturation(const json& cfg) {
  const kiv::DiscreteInstance inst = kiv::config::instance_from(cfg);
  const kiv::SaturationStudyConfig sc = kiv::config::saturation_study_from(cfg);
  const kiv::SaturationReport rep = kiv::run_saturation_study(inst, sc);
  const double tol = 0.05;
  std::optional<double> tik;
  for (std::size_t f = 0; f < sc.filters.size(); ++f)
    if (sc.filters[f].kind == kiv::FilterKind::tikhonov) tik = rep.fits[f].slope;
  bool pass = true;
  json slopes = json::object();
  for (std::size_t f = 0; f < sc.filters.size(); ++f) {
    slopes[sc.filters[f].name()] = rep.fits[f].slope;
    if (tik) pass = pass && rep.fits[f].slope >= *tik - tol;
    std::cout << std::left << std::setw(28) << sc.filters[f].name() << " slope " << fmt(rep.fits[f].slope) << " (se "
              << fmt(rep.fits[f].stderr_) << ")\n";
  }
  const fs::path dir = kiv::config::output_dir(cfg);
  {
    std::ofstream out = kiv::io::open_out(dir / "saturation.csv");
    kiv::io::write_saturation_csv(out, rep);
  }
  write_json(dir / "saturation_summary.json",
             {{"study", "saturation"},
              {"params", {{"m_grid", sc.m_grid}, {"replicates", sc.replicates}, {"beta_z", sc.beta_z}, {"p_z", sc.p_z}}},
              {"slopes", slopes},
              {"tolerances", {{"ordering", tol}}},
              {"pass", pass}});
  write_manifest(dir, "saturation", cfg);
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_simulate(const json& cfg) {
  const json& sc = cfg.at("scenario");
  const auto kind = kiv::config::get<std::string>(sc, "kind", "scenario");
  const auto m = kiv::config::get<long long>(sc, "m", "scenario");
  const auto n = kiv::config::get<long long>(sc, "n", "scenario");
  const std::uint64_t seed = kiv::config::seed_from(sc, "scenario");
  const fs::path dir = kiv::config::output_dir(cfg);
  if (kind == "discrete") {
    const kiv::DiscreteInstance inst = kiv::config::instance_from(cfg);
    kiv::io::write_dataset(dir / "dataset.csv", kiv::io::to_dataset(kiv::sample_discrete(inst, m, n, seed)));
    kiv::io::write_instance(dir / "instance.txt", inst);
  } else if (kind == "continuous_demo") {
    kiv::ContinuousDemoParams p;
    p.m = m;
    p.n = n;
    p.seed = seed;
    p.confounding_strength = kiv::config::get<double>(sc, "confounding_strength", "scenario");
    const kiv::ContinuousDemo demo = kiv::continuous_demo(p);
    kiv::io::write_dataset(dir / "dataset.csv", kiv::io::to_dataset(demo));
    std::ofstream out = kiv::io::open_out(dir / "h0.csv");
    out << "x0,h0\n";
    for (int i = 0; i < 201; ++i) {
      const double x = -3.0 + 6.0 * i / 200.0;
      out << fmt(x) << "," << fmt(kiv::demo_h0(x)) << "\n";
    }
  } else {
    throw kiv::ValidationError("config: scenario.kind must be 'discrete' or 'continuous_demo'");
  }
  write_manifest(dir, "simulate", cfg);
  std::cout << "wrote " << (dir / "dataset.csv").string() << "\n";
  return 0;
}

kiv::Points read_query(const fs::path& path, Eigen::Index dx) {
  std::ifstream in = kiv::io::open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<double> vals;
  long rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    Eigen::Index cols = 0;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size() && tok.find_first_not_of(" \r", used) != std::string::npos) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw kiv::ValidationError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + tok + "'");
      }
      ++cols;
    }
    if (cols != dx)
      throw kiv::ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dx) +
                                 " columns");
    ++rows;
  }
  if (rows == 0) throw kiv::ValidationError(path.string() + ": no query points");
  kiv::Points q(rows, dx);
  for (long i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < dx; ++j) q(i, j) = vals[static_cast<std::size_t>(i * dx + j)];
  return q;
}

int run_fit(const json& cfg, const std::string& data_path, const std::optional<std::string>& query_path) {
  using kiv::config::get;
  using kiv::config::get_opt;
  const kiv::io::Dataset data = kiv::io::read_dataset(data_path);
  std::optional<kiv::DiscreteInstance> inst;
  const json& kx = cfg.at("kernels").at("x");
  const json& kz = cfg.at("kernels").at("z");
  if (get<std::string>(kx, "family", "kernels.x") == "precomputed" ||
      get<std::string>(kz, "family", "kernels.z") == "precomputed")
    inst.emplace(kiv::config::instance_from(cfg));
  const kiv::KernelSpec kernel_x =
      kiv::config::kernel_from(kx, "kernels.x", inst ? std::optional(inst->gram_x()) : std::nullopt);
  const kiv::KernelSpec kernel_z =
      kiv::config::kernel_from(kz, "kernels.z", inst ? std::optional(inst->gram_z()) : std::nullopt);
  const json& s = cfg.at("schedule");
  const auto m = static_cast<double>(data.z1.rows()), n = static_cast<double>(data.z2.rows());
  const double xi = get_opt<double>(s, "xi", "schedule")
                        .value_or(get<double>(s, "c_xi", "schedule") *
                                  std::pow(m, -get<double>(s, "xi_exponent", "schedule")));
  const double lambda = get_opt<double>(s, "lambda", "schedule")
                            .value_or(get<double>(s, "c_lambda", "schedule") *
                                      std::pow(n, -get<double>(s, "lambda_exponent", "schedule")));
  const kiv::FilterSpec filter = kiv::config::filter_from(cfg.at("filter"));

  const kiv::Stage1Model s1 = kiv::fit_stage1(data.z1, data.x1, kernel_z, kernel_x, filter, xi);
  const kiv::NpivEstimator est = kiv::fit_npiv(s1, data.z2, data.y2, lambda);

  kiv::Points query;
  if (query_path) {
    query = read_query(*query_path, data.x1.cols());
  } else if (inst) {
    query = inst->x_points();
  } else if (data.x1.cols() == 1) {
    const int points = get<int>(cfg.at("fit"), "grid_points", "fit");
    kiv::require(points >= 2, "config: fit.grid_points must be >= 2");
    const double lo = data.x1.minCoeff(), hi = data.x1.maxCoeff();
    query.resize(points, 1);
    for (int i = 0; i < points; ++i) query(i, 0) = lo + (hi - lo) * i / (points - 1);
  } else {
    query = data.x1;
  }
  const Eigen::VectorXd pred = est.predict(query);

  const fs::path dir = kiv::config::output_dir(cfg);
  {
    std::ofstream out = kiv::io::open_out(dir / "predictions.csv");
    for (Eigen::Index j = 0; j < query.cols(); ++j) out << "x" << j << ",";
    out << "h\n";
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
      for (Eigen::Index j = 0; j < query.cols(); ++j) out << fmt(query(i, j)) << ",";
      out << fmt(pred[i]) << "\n";
    }
  }
  json summary = {{"m", data.z1.rows()},         {"n", data.z2.rows()}, {"xi", xi}, {"lambda", lambda},
                  {"filter", filter.name()}, {"rkhs_norm_sq", est.rkhs_norm_sq()}};
  if (inst && !query_path) {
    const kiv::ExactErrors e = kiv::exact_errors(*inst, pred);
    summary["exact_errors_to_hstar"] = {{"l2x", e.l2x}, {"pseudo", e.pseudo}, {"rkhs", e.rkhs}};
  }
  write_json(dir / "fit_summary.json", summary);
  write_manifest(dir, "fit", cfg);
  std::cout << "fitted m=" << data.z1.rows() << " n=" << data.z2.rows() << " xi=" << fmt(xi) << " lambda=" << fmt(lambda)
            << "; wrote " << (dir / "predictions.csv").string() << "\n";
  return 0;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_file, "JSON config file (overrides built-in defaults)");
  app->add_option("--set", c.sets, "Override a config value: key.path=value (repeatable, applied last)");
  app->add_option("-o,--output-dir", c.output_dir, "Output directory (default: $KIV_OUTPUT_DIR or ./runs)");
  app->add_option("--seed", c.seed, "Seed for scenario and experiment streams");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel NPIV with spectral-filter stage 1: fits, simulations and Monte-Carlo studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kiv::config::kVersion);

  Common common;
  bool rates_theory = false;
  std::string data_path;
  std::optional<std::string> query_path;

  auto* fit = app.add_subcommand("fit", "Fit both stages on a dataset CSV and write predictions");
  fit->add_option("-d,--data", data_path, "Dataset CSV (split,z..,x..,y)")->required();
  fit->add_option("-q,--query", query_path, "CSV of query points (header x0..)");
  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from the configured scenario");
  auto* rates = app.add_subcommand("rates", "Convergence-rate slope study");
  rates->add_flag("--theory", rates_theory, "Print the exponent table only");
  auto* minnorm = app.add_subcommand("minnorm", "Minimum-norm convergence study");
  auto* saturation = app.add_subcommand("saturation", "Stage-1 saturation study across filters");
  auto* filters_check = app.add_subcommand("filters-check", "Verify the filter conditions on grids");
  auto* theory = app.add_subcommand("theory", "Exponent and schedule table for the configured parameters");
  for (auto* sub : {fit, simulate, rates, minnorm, saturation, filters_check, theory}) add_common(sub, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    const json cfg = resolve(sub, common);
    if (sub == "fit") return run_fit(cfg, data_path, query_path);
    if (sub == "simulate") return run_simulate(cfg);
    if (sub == "rates") return run_rates(cfg, rates_theory);
    if (sub == "minnorm") return run_minnorm(cfg);
    if (sub == "saturation") return run_saturation(cfg);
    if (sub == "filters-check") return run_filters_check(cfg);
    return run_theory(sub, cfg, nullptr);
  } catch (const kiv::ValidationError& e) {
    std::cerr << "kiv " << sub << ": error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "kiv " << sub << ": config error: " << e.what() << "\n";
    return 1;
  } catch (const kiv::NumericalError& e) {
    std::cerr << "kiv " << sub << ": numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kiv " << sub << ": numerical failure: " << e.what() << "\n";
    return 2;
  }
}
