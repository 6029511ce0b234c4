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

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/experiments.hpp"
#include "kiv/filters.hpp"
#include "kiv/io.hpp"
#include "kiv/kernels.hpp"
#include "kiv/rate_theory.hpp"
#include "kiv/scenarios.hpp"

namespace kiv::config {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "KIV_OUTPUT_DIR";

// Precedence, lowest first: built-in defaults (per subcommand), the
// KIV_OUTPUT_DIR environment variable, the --config file, --set overrides.

inline json kernel_defaults() {
  return {{"family", "gaussian"}, {"lengthscale", 1.0}, {"order", 1.5}, {"kappa_sq", 1.0}};
}

inline json filter_json(const FilterSpec& f) {
  return {{"kind", std::string(to_string(f.kind))}, {"tau", f.step_tau}, {"nu", f.nu}};
}

inline json base_defaults() {
  return {
      {"scenario",
       {{"kind", "discrete"},
        {"instance", "reference"},
        {"sigma", nullptr},
        {"m", 1000},
        {"n", 1000},
        {"seed", 0},
        {"confounding_strength", 1.0}}},
      {"kernels", {{"x", kernel_defaults()}, {"z", kernel_defaults()}}},
      // null tau / nu fall back to 1 and 2 in filter_from
      {"filter", {{"kind", "tikhonov"}, {"tau", nullptr}, {"nu", nullptr}}},
      {"schedule",
       {{"a", 3.0},
        {"beta_x", 1.0},
        {"p_x", 1.0},
        {"gamma0", 1.0},
        {"gamma1", 1.0},
        {"c_f", 0},
        {"beta_z", 2.0},
        {"p_z", 0.5},
        {"alpha_z", 0.5},
        {"gamma", 0.0},
        {"c_xi", 1.0},
        {"c_lambda", 1.0},
        {"xi_exponent", 0.5},
        {"lambda_exponent", 1.0 / 3.0},
        {"xi", nullptr},
        {"lambda", nullptr}}},
      {"experiment",
       {{"n_grid", {128, 256, 512, 1024, 2048, 4096}},
        {"m_grid", {256, 512, 1024, 2048, 4096, 8192}},
        {"sizes", {500, 2000, 8000}},
        {"replicates", 20},
        {"seed", 0},
        {"threads", 0},
        {"output_dir", "runs"},
        {"filters", json::array({filter_json(FilterSpec::tikhonov()), filter_json(FilterSpec::iterated_tikhonov(3)),
                                 filter_json(FilterSpec::pcr())})},
        {"a_sweep", json::array()}}},
      {"filters_check",
       {{"kappa_sq", 1.0},
        {"xi_min", 1e-4},
        {"xi_max", 1.0},
        {"xi_points", 13},
        {"x_points", 200},
        {"theta_points", 50},
        {"landweber_tau", 1.0},
        {"iterated_nu", 3},
        {"rho_probe", 5.0},
        {"saturation_probe", 3.0}}},
      {"fit", {{"query", nullptr}, {"grid_points", 200}}},
  };
}

/// Defaults with the subcommand's own scenario and grid choices applied.
inline json defaults(std::string_view sub) {
  json c = base_defaults();
  if (sub == "rates") {
    c["scenario"]["instance"] = "rate";
    c["schedule"].update({{"a", 2.0}, {"beta_x", 1.0}, {"p_x", 1.0}, {"gamma0", nullptr}, {"gamma1", nullptr},
                          {"c_f", nullptr}, {"beta_z", 1.0}, {"p_z", 1.0}, {"alpha_z", 1.0}});
    c["experiment"]["replicates"] = 20;
  } else if (sub == "saturation") {
    c["scenario"]["instance"] = "saturation";
    c["schedule"].update({{"beta_z", 3.5}, {"p_z", 0.5}, {"alpha_z", 0.5}});
    c["experiment"]["replicates"] = 10;
  } else if (sub == "fit" || sub == "simulate") {
    c["scenario"]["kind"] = "continuous_demo";
    c["schedule"].update({{"xi", 0.01}, {"lambda", 0.01}});
  }
  return c;
}

inline std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

/// Overlay `patch` on `base`. Object keys must already exist in `base`, so
/// typos fail loudly; a null default accepts any value.
inline void merge_strict(json& base, const json& patch, const std::string& where, const std::string& prefix = "") {
  if (!patch.is_object()) throw ValidationError(where + ": '" + (prefix.empty() ? "<root>" : prefix) +
                                                "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = join_path(prefix, it.key());
    if (!base.contains(it.key())) throw ValidationError(where + ": unknown config key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it->is_object()) {
      merge_strict(slot, *it, where, path);
    } else if (slot.is_object() != it->is_object() && !slot.is_null()) {
      throw ValidationError(where + ": config key '" + path + "' has the wrong type");
    } else {
      slot = *it;
    }
  }
}

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in = io::open_in(path);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed config: " + e.what());
  }
}

/// "a.b.c=value"; value parsed as JSON, or taken as a bare string.
inline void apply_set(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key.path=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json patch = value;
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1)
    parts.push_back(key.substr(start, dot - start));
  parts.push_back(key.substr(start));
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ValidationError("--set: empty path segment in '" + key + "'");
    patch = json{{*it, patch}};
  }
  merge_strict(cfg, patch, "--set " + key);
}

inline json resolve(std::string_view sub, const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& sets) {
  json cfg = defaults(sub);
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) cfg["experiment"]["output_dir"] = env;
  if (file) merge_strict(cfg, parse_file(*file), file->string());
  for (const auto& s : sets) apply_set(cfg, s);
  return cfg;
}

// ---------------------------------------------------------------------------
// Typed views

template <class T>
T get(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || node.at(key).is_null())
    throw ValidationError("config: '" + join_path(where, key) + "' is required");
  try {
    return node.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: '" + join_path(where, key) + "' has the wrong type");
  }
}

template <class T>
std::optional<T> get_opt(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || node.at(key).is_null()) return std::nullopt;
  return get<T>(node, key, where);
}

inline FilterSpec filter_from(const json& f, const std::string& where = "filter") {
  const auto kind = get<std::string>(f, "kind", where);
  if (kind == "tikhonov") return FilterSpec::tikhonov();
  if (kind == "pcr") return FilterSpec::pcr();
  if (kind == "gradient_flow") return FilterSpec::gradient_flow();
  if (kind == "landweber") return FilterSpec::landweber(get_opt<double>(f, "tau", where).value_or(1.0));
  if (kind == "iterated_tikhonov") return FilterSpec::iterated_tikhonov(get_opt<int>(f, "nu", where).value_or(2));
  throw ValidationError("config: unknown filter kind '" + kind + "' at '" + where + "'");
}

inline KernelSpec kernel_from(const json& k, const std::string& where,
                              const std::optional<Eigen::MatrixXd>& support_gram = std::nullopt) {
  const auto family = get<std::string>(k, "family", where);
  if (family == "gaussian") return KernelSpec::gaussian(get<double>(k, "lengthscale", where));
  if (family == "laplace") return KernelSpec::laplace(get<double>(k, "lengthscale", where));
  if (family == "matern") return KernelSpec::matern(get<double>(k, "order", where), get<double>(k, "lengthscale", where));
  if (family == "linear") return KernelSpec::linear(get<double>(k, "kappa_sq", where));
  if (family == "precomputed") {
    if (!support_gram)
      throw ValidationError("config: '" + where + "' is precomputed but the scenario has no discrete instance");
    return KernelSpec::precomputed(*support_gram);
  }
  throw ValidationError("config: unknown kernel family '" + family + "' at '" + where + "'");
}

inline std::optional<DiscreteInstance> builtin_instance(const std::string& name) {
  if (name == "reference") return reference_instance();
  if (name == "rate") return rate_instance();
  if (name == "saturation") return saturation_instance();
  if (name == "link-square") return link_square_instance();
  return std::nullopt;
}

/// Built-in name or path to an instance file; scenario.sigma overrides the noise.
inline DiscreteInstance instance_from(const json& cfg) {
  const json& sc = cfg.at("scenario");
  const auto name = get<std::string>(sc, "instance", "scenario");
  std::optional<DiscreteInstance> inst = builtin_instance(name);
  if (!inst) inst = io::read_instance(name);
  if (auto sigma = get_opt<double>(sc, "sigma", "scenario")) {
    require(*sigma >= 0.0, "config: scenario.sigma must be nonnegative");
    InstanceData d = inst->data();
    d.sigma = Eigen::VectorXd::Constant(d.cond.rows(), *sigma);
    inst.emplace(std::move(d));
  }
  return *inst;
}

/// Schedule section as rate parameters. Missing gamma0/gamma1/c_f are filled
/// from the instance's link diagnostics when an instance is given.
inline RateParams rate_params_from(const json& cfg, const DiscreteInstance* inst = nullptr) {
  const json& s = cfg.at("schedule");
  RateParams p;
  p.a = get<double>(s, "a", "schedule");
  p.beta_x = get<double>(s, "beta_x", "schedule");
  p.p_x = get<double>(s, "p_x", "schedule");
  p.beta_z = get<double>(s, "beta_z", "schedule");
  p.p_z = get<double>(s, "p_z", "schedule");
  p.alpha_z = get<double>(s, "alpha_z", "schedule");
  p.gamma = get<double>(s, "gamma", "schedule");
  auto g0 = get_opt<double>(s, "gamma0", "schedule");
  auto g1 = get_opt<double>(s, "gamma1", "schedule");
  auto cf = get_opt<int>(s, "c_f", "schedule");
  if ((!g0 || !g1 || !cf) && inst) {
    const InstanceTheory th = link_parameters(*inst);
    if (!g0) g0 = th.gamma0;
    if (!g1) g1 = th.gamma1;
    if (!cf) cf = th.c_f;
  }
  if (!g0 || !g1 || !cf) throw ValidationError("config: schedule.gamma0, gamma1 and c_f are required");
  p.gamma0 = *g0;
  p.gamma1 = *g1;
  p.c_f = *cf;
  p.validate();
  return p;
}

inline json rate_params_json(const RateParams& p) {
  return {{"a", p.a},           {"beta_x", p.beta_x}, {"p_x", p.p_x},   {"gamma0", p.gamma0},
          {"gamma1", p.gamma1}, {"c_f", p.c_f},       {"beta_z", p.beta_z}, {"p_z", p.p_z},
          {"alpha_z", p.alpha_z}, {"gamma", p.gamma}};
}

inline std::vector<long long> grid_from(const json& cfg, const char* key) {
  return get<std::vector<long long>>(cfg.at("experiment"), key, "experiment");
}

inline std::uint64_t seed_from(const json& node, const std::string& where) {
  const json& v = node.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ValidationError("config: '" + where + ".seed' must be a nonnegative integer");
}

inline std::filesystem::path output_dir(const json& cfg) {
  return get<std::string>(cfg.at("experiment"), "output_dir", "experiment");
}

inline RateStudyConfig rate_study_from(const json& cfg, const DiscreteInstance& inst) {
  RateStudyConfig c;
  c.params = rate_params_from(cfg, &inst);
  c.n_grid = grid_from(cfg, "n_grid");
  const json& e = cfg.at("experiment");
  c.replicates = get<int>(e, "replicates", "experiment");
  c.seed = seed_from(e, "experiment");
  c.threads = get<unsigned>(e, "threads", "experiment");
  c.c_xi = get<double>(cfg.at("schedule"), "c_xi", "schedule");
  c.c_lambda = get<double>(cfg.at("schedule"), "c_lambda", "schedule");
  c.filter = filter_from(cfg.at("filter"));
  return c;
}

inline MinNormStudyConfig minnorm_study_from(const json& cfg) {
  MinNormStudyConfig c;
  const json& e = cfg.at("experiment");
  const json& s = cfg.at("schedule");
  c.sizes = grid_from(cfg, "sizes");
  c.replicates = get<int>(e, "replicates", "experiment");
  c.seed = seed_from(e, "experiment");
  c.threads = get<unsigned>(e, "threads", "experiment");
  c.c_xi = get<double>(s, "c_xi", "schedule");
  c.xi_exponent = get<double>(s, "xi_exponent", "schedule");
  c.c_lambda = get<double>(s, "c_lambda", "schedule");
  c.lambda_exponent = get<double>(s, "lambda_exponent", "schedule");
  c.filter = filter_from(cfg.at("filter"));
  return c;
}

inline SaturationStudyConfig saturation_study_from(const json& cfg) {
  SaturationStudyConfig c;
  const json& e = cfg.at("experiment");
  const json& s = cfg.at("schedule");
  c.m_grid = grid_from(cfg, "m_grid");
  c.replicates = get<int>(e, "replicates", "experiment");
  c.seed = seed_from(e, "experiment");
  c.threads = get<unsigned>(e, "threads", "experiment");
  c.c_xi = get<double>(s, "c_xi", "schedule");
  c.beta_z = get<double>(s, "beta_z", "schedule");
  c.p_z = get<double>(s, "p_z", "schedule");
  c.filters.clear();
  const json& fl = e.at("filters");
  if (!fl.is_array()) throw ValidationError("config: 'experiment.filters' must be an array");
  for (std::size_t i = 0; i < fl.size(); ++i)
    c.filters.push_back(filter_from(fl[i], "experiment.filters[" + std::to_string(i) + "]"));
  return c;
}

}  // namespace kiv::config
