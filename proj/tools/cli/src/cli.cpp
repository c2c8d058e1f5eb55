#include "policylab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "policylab/csv.hpp"
#include "policylab/error.hpp"
#include "policylab/parallel.hpp"

namespace policylab::cli {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json real(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json threshold(double x) { return x == kNoThreshold ? json(nullptr) : real(x); }

double read_real(const json& j, std::string_view key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError("field '" + std::string(key) + "' must be a number");
}

// Reads object fields by name and rejects anything left over.
class Fields {
 public:
  Fields(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ParseError(what_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    assign(*it, key, out);
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParseError("unknown field '" + it.key() + "' in " + what_);
    }
  }

 private:
  static void assign(const json& v, const char* key, double& out) { out = read_real(v, key); }
  static void assign(const json& v, const char* key, std::optional<double>& out) { out = read_real(v, key); }
  static void assign(const json& v, const char* key, bool& out) {
    if (!v.is_boolean()) throw ParseError("field '" + std::string(key) + "' must be true or false");
    out = v.get<bool>();
  }
  static void assign(const json& v, const char* key, int& out) {
    if (!v.is_number_integer()) throw ParseError("field '" + std::string(key) + "' must be an integer");
    out = v.get<int>();
  }
  static void assign(const json& v, const char* key, std::vector<double>& out) {
    if (!v.is_array()) throw ParseError("field '" + std::string(key) + "' must be an array");
    out.clear();
    for (const auto& e : v) out.push_back(read_real(e, key));
  }

  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("malformed " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

json violations_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) {
    json e{{"assumption", v.assumption}, {"message", v.message}};
    e["row"] = v.row ? json(*v.row) : json(nullptr);
    out.push_back(std::move(e));
  }
  return out;
}

json sample_constants(const Dataset& d) {
  return {{"overlap_k", real(d.overlap_k)}, {"outcome_bound_M", real(d.outcome_bound_M)}, {"n", d.size()},
          {"dimension", d.dimension()}};
}

json envelope(const RunConfig& c, json constants, json result) {
  constants["bound_constants"] = to_json(c.constants);
  return {{"command", to_string(c.command)}, {"config", to_json(c)}, {"constants", std::move(constants)},
          {"result", std::move(result)}};
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file_atomic(c.out_path, text);
  }
}

void emit_json(const RunConfig& c, const json& j) { emit(c, j.dump(2) + "\n"); }

unsigned thread_count(const RunConfig& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string("missing required option ") + flag);
  if (!std::filesystem::exists(p)) throw IoError("input file '" + p.string() + "' does not exist");
}

json read_json_file(const std::filesystem::path& p) {
  const std::string text = read_file(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

PolicyClassSpec class_spec(const RunConfig& c, PolicyKind kind, std::size_t dimension) {
  PolicyClassSpec s;
  s.kind = kind;
  s.grid_quantiles = c.grid_quantiles;
  const auto active = static_cast<int>(dimension) + (kind == PolicyKind::augmented ? 1 : 0);
  s.vc_dimension = c.vc_dimension.value_or(std::max(1, active));
  return s;
}

int max_measurements(const Dataset& d) {
  std::size_t k = 0;
  for (const auto& o : d.observations) k = std::max(k, o.measurements.size());
  return static_cast<int>(k);
}

void run_gen(const RunConfig& c) {
  require_path(c.spec_path, "--spec");
  DgpSpec spec = dgp_spec_from_json(read_json_file(c.spec_path));
  if (c.n == 0) throw ConfigError("--n must be positive");
  const Dataset d = generate(spec, c.n, thread_count(c));
  emit(c, dataset_csv(d));
}

void run_ewm(const RunConfig& c) {
  Dataset d = load_dataset(c);
  if (c.policy_class == PolicyKind::augmented) d = attach_proxy(d, c.proxy_t);
  const PolicyClassSpec cls = class_spec(c, c.policy_class, d.dimension());
  json result;
  if (cls.kind == PolicyKind::random) {
    result["welfare"] = random_rule_welfare(d).value;
    result["rule"] = nullptr;
  } else {
    const EwmResult fit = ewm_search(d, cls);
    result["welfare"] = fit.best.value;
    result["rule"] = to_json(*fit.best.rule);
    result["grid_size"] = fit.grid_size;
    result["rescored"] = fit.rescored;
  }
  result["class"] = to_string(cls.kind);
  result["vc_dimension"] = cls.vc_dimension;
  result["status_quo_welfare"] = status_quo_welfare(d).value;
  result["violations"] = violations_json(validate_dataset(d));
  emit_json(c, envelope(c, sample_constants(d), std::move(result)));
}

void run_eval(const RunConfig& c) {
  Dataset d = load_dataset(c);
  const bool augmented =
      std::find(c.classes.begin(), c.classes.end(), PolicyKind::augmented) != c.classes.end();
  if (augmented) d = attach_proxy(d, c.proxy_t);
  std::vector<PolicyClassSpec> classes;
  for (auto k : c.classes) classes.push_back(class_spec(c, k, d.dimension()));
  SplitPlan plan{c.est_fraction, c.B, c.seed};
  const ReplicationReport report = run_algorithm1(d, plan, classes, thread_count(c));
  json constants = sample_constants(d);
  constants["vc_dimensions"] = json::array();
  for (const auto& s : classes) constants["vc_dimensions"].push_back(s.vc_dimension);
  json result = to_json(report);
  result["violations"] = violations_json(validate_dataset(d));
  emit_json(c, envelope(c, std::move(constants), std::move(result)));
  if (!c.plot_path.empty()) write_file_atomic(c.plot_path, export_plot_data(report));
}

void run_design(const RunConfig& c) {
  if (c.out_path.empty()) throw ConfigError("design needs --out; the run record is written next to it");
  const Dataset d = load_dataset(c);
  if (c.budgets.empty()) throw ConfigError("missing required option --budgets");
  DesignEvaluation config;
  config.budgets = c.budgets;
  config.t_grid = c.t_grid.empty() ? std::vector<int>{0, 1, 2, 3, 4, 5} : c.t_grid;
  config.costs = {c.cn, c.ct};
  config.R = c.R;
  config.cb_class = class_spec(c, PolicyKind::covariate_based, d.dimension());
  config.augmented_class = class_spec(c, PolicyKind::augmented, d.dimension());
  SplitPlan plan{c.est_fraction, c.B, c.seed};
  const DesignFrontier frontier = run_algorithm2(d, config, plan, thread_count(c));
  write_file_atomic(c.out_path, frontier_csv(frontier));
  json constants = sample_constants(d);
  constants["vc_dimensions"] = {config.cb_class.vc_dimension, config.augmented_class.vc_dimension};
  write_file_atomic(c.out_path.string() + ".json", envelope(c, std::move(constants), to_json(frontier)).dump(2) + "\n");
  if (!c.plot_path.empty()) write_file_atomic(c.plot_path, export_plot_data(frontier));
}

void run_plan(const RunConfig& c) {
  require_path(c.problem_path, "--problem");
  const DesignProblem p = design_problem_from_json(read_json_file(c.problem_path), c.constants);
  const DesignChoice choice = optimal_design(p);
  json result = to_json(choice);
  const FocMultipliers foc = foc_multipliers(p, choice.interior_n, choice.interior_t);
  result["foc_multipliers"] = {{"from_n", real(foc.from_n)}, {"from_t", real(foc.from_t)}};
  emit_json(c, envelope(c, {{"problem", to_json(p)}}, std::move(result)));
}

void run_bounds(const RunConfig& c) {
  require_path(c.problem_path, "--problem");
  const json j = read_json_file(c.problem_path);
  BoundInputs b;
  b.constants = c.constants;
  double n = 1.0;
  int v_x = 1, v_xa = 1;
  std::optional<double> sigma0, rho, m0, t;
  Fields f(j, "bound inputs");
  f.get("M", b.M);
  f.get("k", b.k);
  f.get("n", n);
  f.get("v_x", v_x);
  f.get("v_xa", v_xa);
  f.get("kappa", b.kappa);
  f.get("lipschitz_Ls", b.lipschitz_Ls);
  f.get("rmse", b.rmse);
  f.get("rmse_conditional", b.rmse_conditional);
  f.get("sigma_bar", b.sigma_bar);
  f.get("delta_misspec", b.delta_misspec);
  f.get("sigma0", sigma0);
  f.get("rho", rho);
  f.get("m0", m0);
  f.get("t", t);
  f.finish();
  if (!(n >= 0.0) || n != std::floor(n)) throw DomainError("n must be a nonnegative integer");
  b.n = static_cast<std::size_t>(n);
  if (m0 && t && !j.contains("rmse")) b.rmse = repeated_measurement_rmse(*m0, *t);
  BoundInputs b_cb = b, b_ha = b;
  b_cb.v = v_x;
  b_ha.v = v_xa;
  json result{{"cb_upper", real(cb_upper_bound(b_cb))},
              {"ha_upper", real(ha_upper_bound(b_ha))},
              {"augmentation_threshold", real(augmentation_threshold(b_cb, b_ha))},
              {"preference", to_string(compare_classes(b_cb, b_ha))},
              {"rmse", real(b.rmse)}};
  if (sigma0) result["cb_lower"] = real(cb_lower_bound(b_cb, *sigma0));
  if (rho) result["ha_lower"] = real(ha_lower_bound(b_ha, *rho));
  json constants{{"M", real(b.M)},         {"k", real(b.k)},
                 {"n", b.n},               {"v_x", v_x},
                 {"v_xa", v_xa},           {"kappa", real(b.kappa)},
                 {"lipschitz_Ls", real(b.lipschitz_Ls)}, {"sigma_bar", real(b.sigma_bar)},
                 {"delta_misspec", real(b.delta_misspec)}, {"rmse_conditional", b.rmse_conditional}};
  emit_json(c, envelope(c, std::move(constants), std::move(result)));
}

void run_rate(const RunConfig& c) {
  require_path(c.spec_path, "--spec");
  DgpSpec spec = dgp_spec_from_json(read_json_file(c.spec_path));
  const PolicyClassSpec cls = class_spec(c, c.policy_class, static_cast<std::size_t>(spec.dimension()));
  const RateResult r = regret_rate_experiment(spec, cls, c.n_grid, c.reps, thread_count(c), c.proxy_t);
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"n", p.n}, {"mean_regret", real(p.mean_regret)}, {"std_error", real(p.std_error)}});
  }
  const ScoreConstants sc = score_constants(spec);
  json constants{{"dgp", to_json(spec)},
                 {"oracle_welfare", real(oracle_welfare(spec))},
                 {"kappa", real(sc.kappa)},
                 {"lipschitz_Ls", real(sc.lipschitz)},
                 {"vc_dimension", cls.vc_dimension}};
  emit_json(c, envelope(c, std::move(constants),
                        {{"points", std::move(points)}, {"slope", real(r.slope)}, {"intercept", real(r.intercept)}}));
}

int exit_code_for(std::string_view kind) {
  if (kind == "parse_error") return kParse;
  if (kind == "io_error") return kIo;
  if (kind == "config_error") return kConfig;
  if (kind == "parameter_error") return kParameter;
  if (kind == "overlap_error") return kOverlap;
  if (kind == "domain_error") return kDomain;
  return kInternal;
}

}  // namespace

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::gen: return "gen";
    case Command::ewm: return "ewm";
    case Command::eval: return "eval";
    case Command::design: return "design";
    case Command::plan: return "plan";
    case Command::bounds: return "bounds";
    case Command::rate: return "rate";
  }
  return "gen";
}

Command parse_command(std::string_view name) {
  for (auto c : {Command::gen, Command::ewm, Command::eval, Command::design, Command::plan, Command::bounds,
                 Command::rate}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

json to_json(const BoundConstants& c) {
  return {{"C1", c.C1}, {"C2", c.C2}, {"C3", c.C3}, {"C4", c.C4}, {"C5", c.C5}};
}

json to_json(const RunConfig& c) {
  json classes = json::array();
  for (auto k : c.classes) classes.push_back(to_string(k));
  json n_grid = json::array();
  for (auto n : c.n_grid) n_grid.push_back(n);
  json budgets = json::array();
  for (double b : c.budgets) budgets.push_back(real(b));
  return {{"command", to_string(c.command)},
          {"spec_path", c.spec_path.string()},
          {"data_path", c.data_path.string()},
          {"problem_path", c.problem_path.string()},
          {"out_path", c.out_path.string()},
          {"plot_path", c.plot_path.string()},
          {"seed", c.seed},
          {"threads", c.threads},
          {"overlap_k", c.overlap_k ? real(*c.overlap_k) : json(nullptr)},
          {"outcome_bound_M", c.outcome_bound_M ? real(*c.outcome_bound_M) : json(nullptr)},
          {"n", c.n},
          {"policy_class", to_string(c.policy_class)},
          {"classes", std::move(classes)},
          {"grid_quantiles", c.grid_quantiles},
          {"vc_dimension", c.vc_dimension ? json(*c.vc_dimension) : json(nullptr)},
          {"proxy_t", c.proxy_t},
          {"B", c.B},
          {"est_fraction", c.est_fraction},
          {"budgets", std::move(budgets)},
          {"t_grid", c.t_grid},
          {"cn", c.cn},
          {"ct", c.ct},
          {"R", c.R},
          {"n_grid", std::move(n_grid)},
          {"reps", c.reps},
          {"constants", to_json(c.constants)}};
}

DgpSpec dgp_spec_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("DGP spec must be a JSON object");
  if (!j.contains("family") || !j["family"].is_string()) throw ParseError("DGP spec needs a string 'family'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "family" && it.key() != "seed" && it.key() != "params") {
      throw ParseError("unknown field '" + it.key() + "' in DGP spec");
    }
  }
  DgpSpec spec;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("DGP seed must be a nonnegative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  const json params = j.value("params", json::object());
  switch (parse_dgp_family(j["family"].get<std::string>())) {
    case DgpFamily::cb_lower: {
      CbLowerParams p;
      Fields f(params, "cb_lower params");
      f.get("mu_x", p.mu_x);
      f.get("sigma_x", p.sigma_x);
      f.get("sigma0", p.sigma0);
      f.get("p", p.p);
      f.get("d", p.d);
      f.get("k", p.k);
      f.get("M", p.M);
      f.finish();
      spec.params = p;
      break;
    }
    case DgpFamily::ha_lower: {
      HaLowerParams p;
      Fields f(params, "ha_lower params");
      f.get("mu_x", p.mu_x);
      f.get("sigma_x", p.sigma_x);
      f.get("kappa", p.kappa);
      f.get("rho", p.rho);
      f.get("M", p.M);
      f.get("p", p.p);
      f.get("d", p.d);
      f.get("k", p.k);
      f.finish();
      spec.params = p;
      break;
    }
    case DgpFamily::latent_normal: {
      LatentNormalParams p;
      Fields f(params, "latent_normal params");
      f.get("d", p.d);
      f.get("tau_coefficients", p.tau_coefficients);
      f.get("latent_sd", p.latent_sd);
      f.get("noise_sd_sigma_u", p.noise_sd_sigma_u);
      f.get("baseline_sd", p.baseline_sd);
      f.get("baseline_mean", p.baseline_mean);
      f.get("p", p.p);
      f.get("measurements", p.measurements);
      f.get("k", p.k);
      f.get("M", p.M);
      f.finish();
      spec.params = p;
      break;
    }
  }
  validate_spec(spec);
  return spec;
}

json to_json(const DgpSpec& spec) {
  json params = std::visit(
      Overloaded{
          [](const CbLowerParams& p) {
            return json{{"mu_x", real(p.mu_x)}, {"sigma_x", real(p.sigma_x)}, {"sigma0", real(p.sigma0)},
                        {"p", real(p.p)},       {"d", p.d}};
          },
          [](const HaLowerParams& p) {
            return json{{"mu_x", real(p.mu_x)}, {"sigma_x", real(p.sigma_x)}, {"kappa", real(p.kappa)},
                        {"rho", real(p.rho)},   {"M", real(p.M)},             {"p", real(p.p)},
                        {"d", p.d}};
          },
          [](const LatentNormalParams& p) {
            json coefs = json::array();
            for (double x : p.tau_coefficients) coefs.push_back(real(x));
            return json{{"d", p.d},
                        {"tau_coefficients", std::move(coefs)},
                        {"latent_sd", real(p.latent_sd)},
                        {"noise_sd_sigma_u", real(p.noise_sd_sigma_u)},
                        {"baseline_sd", real(p.baseline_sd)},
                        {"baseline_mean", real(p.baseline_mean)},
                        {"p", real(p.p)},
                        {"measurements", p.measurements}};
          },
      },
      spec.params);
  // Resolved defaults, so the document fully determines the draw.
  params["k"] = real(spec.overlap_k());
  params["M"] = real(spec.outcome_bound());
  return {{"family", to_string(spec.family())}, {"seed", spec.seed}, {"params", std::move(params)}};
}

DesignProblem design_problem_from_json(const json& j, const BoundConstants& constants) {
  DesignProblem p;
  std::optional<double> A0, C0, M, k, kappa, Ls, C1;
  Fields f(j, "design problem");
  f.get("budget_B0", p.budget_B0);
  f.get("cost_cn", p.cost_cn);
  f.get("cost_ct", p.cost_ct);
  f.get("m0", p.m0);
  f.get("sigma0", p.sigma0);
  f.get("v_x", p.v_x);
  f.get("v_xa", p.v_xa);
  f.get("A0", A0);
  f.get("C0", C0);
  f.get("M", M);
  f.get("k", k);
  f.get("kappa", kappa);
  f.get("lipschitz_Ls", Ls);
  f.get("C1", C1);
  f.finish();
  const bool primitives = M || k || kappa || Ls;
  if (primitives && (A0 || C0)) throw ConfigError("give either A0 and C0 or the primitives M, k, kappa, lipschitz_Ls");
  if (primitives) {
    if (!M || !k || !kappa) throw ConfigError("primitives need M, k and kappa");
    p = DesignProblem::from_primitives(p.budget_B0, p.cost_cn, p.cost_ct, p.m0, p.sigma0, p.v_x, p.v_xa,
                                       C1.value_or(constants.C1), *M, *k, *kappa, Ls.value_or(1.0));
  } else {
    if (!A0 || !C0) throw ConfigError("design problem needs A0 and C0, or the primitives");
    p.A0 = *A0;
    p.C0 = *C0;
  }
  validate(p);
  return p;
}

json to_json(const DesignProblem& p) {
  return {{"budget_B0", real(p.budget_B0)}, {"cost_cn", real(p.cost_cn)}, {"cost_ct", real(p.cost_ct)},
          {"m0", real(p.m0)},               {"sigma0", real(p.sigma0)},   {"v_x", p.v_x},
          {"v_xa", p.v_xa},                 {"A0", real(p.A0)},           {"C0", real(p.C0)}};
}

json to_json(const DesignChoice& c) {
  return {{"regime", to_string(c.regime)},
          {"n_star", real(c.n_star)},
          {"t_star", real(c.t_star)},
          {"q", real(c.q)},
          {"bound_value", real(c.bound_value)},
          {"cb_value", real(c.cb_value)},
          {"augmented_value", real(c.augmented_value)},
          {"interior_n", real(c.interior_n)},
          {"interior_t", real(c.interior_t)}};
}

json to_json(const ThresholdRule& rule) {
  json cov = json::array();
  for (double x : rule.covariate_thresholds) cov.push_back(threshold(x));
  json out{{"covariate_thresholds", std::move(cov)}, {"augmented", rule.augmented()}};
  out["proxy_threshold"] = rule.proxy_threshold ? threshold(*rule.proxy_threshold) : json(nullptr);
  return out;
}

ThresholdRule rule_from_json(const json& j) {
  if (!j.is_object() || !j.contains("covariate_thresholds")) throw ParseError("rule needs covariate_thresholds");
  ThresholdRule r;
  for (const auto& x : j["covariate_thresholds"]) {
    r.covariate_thresholds.push_back(x.is_null() ? kNoThreshold : read_real(x, "covariate_thresholds"));
  }
  if (j.value("augmented", false)) {
    const auto& p = j.at("proxy_threshold");
    r.proxy_threshold = p.is_null() ? kNoThreshold : read_real(p, "proxy_threshold");
  }
  return r;
}

json to_json(const ReplicationReport& r) {
  json rules = json::array();
  for (std::size_t i = 0; i < r.rules.size(); ++i) {
    json gains = json::object();
    for (std::size_t c = 0; c < r.rules.size(); ++c) {
      if (c != i) gains[r.rules[c]] = real(r.mean_gain[i][c]);
    }
    rules.push_back({{"name", r.rules[i]},
                     {"mean_welfare", real(r.mean_welfare[i])},
                     {"harm_rate", real(r.harm_rate[i])},
                     {"gain_over_status_quo", real(r.gain_over_status_quo[i])},
                     {"gain_of_other_rules", std::move(gains)}});
  }
  json welfare = json::array();
  for (const auto& row : r.welfare) {
    json w = json::array();
    for (double x : row) w.push_back(real(x));
    welfare.push_back(std::move(w));
  }
  json sq = json::array();
  for (double x : r.status_quo) sq.push_back(real(x));
  return {{"replications", r.replications()}, {"est_size", r.est_size},
          {"test_size", r.test_size},         {"status_quo_mean", real(r.status_quo_mean)},
          {"rules", std::move(rules)},        {"welfare", std::move(welfare)},
          {"status_quo", std::move(sq)}};
}

json to_json(const DesignFrontier& f) {
  json cells = json::array();
  for (const auto& c : f.cells) {
    cells.push_back({{"budget", real(c.budget)},
                     {"t", c.t},
                     {"n_feasible", c.n_feasible},
                     {"mean_welfare", real(c.mean_welfare)},
                     {"std_error", real(c.std_error)},
                     {"mean_cb_welfare", real(c.mean_cb_welfare)},
                     {"mean_random_welfare", real(c.mean_random_welfare)},
                     {"is_optimal", c.is_optimal}});
  }
  json optima = json::array();
  for (const auto& o : f.optima) {
    optima.push_back({{"budget", real(o.budget)},
                      {"t_star", o.t_star},
                      {"n_star", o.n_star},
                      {"welfare_star", real(o.welfare_star)},
                      {"cb_only_n", o.cb_only_n},
                      {"cb_only_welfare", real(o.cb_only_welfare)},
                      {"gain", real(o.gain)}});
  }
  return {{"cells", std::move(cells)},
          {"optima", std::move(optima)},
          {"short_units", f.short_units},
          {"est_size", f.est_size},
          {"test_size", f.test_size}};
}

std::vector<double> parse_budget_list(std::string_view text) {
  std::vector<double> out;
  const auto parts = split(text, ':');
  if (parts.size() == 3) {
    const double lo = parse_number<double>(parts[0], "budget range start");
    const double hi = parse_number<double>(parts[1], "budget range end");
    const double step = parse_number<double>(parts[2], "budget range step");
    if (!(step > 0.0) || hi < lo) throw ConfigError("budget range needs lo <= hi and a positive step");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + step * static_cast<double>(i));
    return out;
  }
  if (parts.size() != 1) throw ConfigError("budgets must be lo:hi:step or a comma list");
  for (auto p : split(text, ',')) out.push_back(parse_number<double>(p, "budget"));
  return out;
}

std::vector<int> parse_int_range(std::string_view text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string_view::npos) {
    const int lo = parse_number<int>(text.substr(0, dots), "range start");
    const int hi = parse_number<int>(text.substr(dots + 2), "range end");
    if (hi < lo) throw ConfigError("range end below start");
    for (int t = lo; t <= hi; ++t) out.push_back(t);
    return out;
  }
  for (auto p : split(text, ',')) out.push_back(parse_number<int>(p, "integer"));
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (auto p : split(text, ',')) out.push_back(parse_number<std::size_t>(p, "count"));
  return out;
}

std::vector<PolicyKind> parse_class_list(std::string_view text) {
  std::vector<PolicyKind> out;
  for (auto p : split(text, ',')) {
    try {
      out.push_back(parse_policy_kind(to_lower(p)));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

std::string frontier_csv(const DesignFrontier& f) {
  std::string out = "budget,t,n_feasible,mean_welfare,is_optimal\n";
  for (const auto& c : f.cells) {
    out += format_real(c.budget) + ',' + std::to_string(c.t) + ',' + std::to_string(c.n_feasible) + ',' +
           format_real(c.mean_welfare) + ',' + (c.is_optimal ? "1" : "0") + '\n';
  }
  return out;
}

std::string export_plot_data(const ReplicationReport& r) {
  std::string out = "x,series,value\n";
  const std::size_t B = r.replications();
  for (std::size_t k = 0; k < r.rules.size(); ++k) {
    std::vector<double> w(B);
    for (std::size_t b = 0; b < B; ++b) w[b] = r.welfare[b][k];
    std::sort(w.begin(), w.end());
    for (std::size_t b = 0; b < B; ++b) {
      out += format_real(w[b]) + ',' + r.rules[k] + ',' +
             format_real(static_cast<double>(b + 1) / static_cast<double>(B)) + '\n';
    }
  }
  return out;
}

std::string export_plot_data(const DesignFrontier& f) {
  std::string out = "x,series,value\n";
  for (const auto& c : f.cells) {
    out += std::to_string(c.t) + ",budget=" + format_real(c.budget) + ',' + format_real(c.mean_welfare) + '\n';
  }
  return out;
}

Dataset load_dataset(const RunConfig& c) {
  require_path(c.data_path, "--data");
  Dataset d = read_dataset_csv(c.data_path);
  if (d.empty()) throw ConfigError("data file '" + c.data_path.string() + "' has no rows");
  double k = 0.5, M = 0.0;
  for (const auto& o : d.observations) {
    k = std::min(k, std::min(o.propensity, 1.0 - o.propensity));
    M = std::max(M, 2.0 * std::abs(o.outcome));
  }
  d.overlap_k = c.overlap_k.value_or(k);
  d.outcome_bound_M = c.outcome_bound_M.value_or(M > 0.0 ? M : 1.0);
  return d;
}

Dataset attach_proxy(const Dataset& d, int proxy_t) {
  if (proxy_t < 0) throw ConfigError("--t must be nonnegative");
  const int t = proxy_t > 0 ? proxy_t : max_measurements(d);
  if (t == 0) throw ConfigError("augmented class needs measurement columns m1..mk");
  Dataset out = build_proxy(d, {t, ProxySelection::first_t, 0, RaggedPolicy::use_available});
  for (auto& o : out.observations) {
    if (!o.proxy) o.proxy = kNoThreshold;
  }
  return out;
}

void run(const RunConfig& c) {
  switch (c.command) {
    case Command::gen: return run_gen(c);
    case Command::ewm: return run_ewm(c);
    case Command::eval: return run_eval(c);
    case Command::design: return run_design(c);
    case Command::plan: return run_plan(c);
    case Command::bounds: return run_bounds(c);
    case Command::rate: return run_rate(c);
  }
}

json error_json(std::string_view kind, std::string_view message, int code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

int dispatch(const RunConfig& c, std::ostream& err) {
  try {
    run(c);
    return kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_json(e.kind(), e.what(), code).dump() << "\n";
    return code;
  } catch (const std::exception& e) {
    err << error_json("internal_error", e.what(), kInternal).dump() << "\n";
    return kInternal;
  }
}

}  // namespace policylab::cli
