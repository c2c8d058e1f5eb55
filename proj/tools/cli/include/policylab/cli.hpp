#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "policylab/bounds.hpp"
#include "policylab/dgp.hpp"
#include "policylab/harness.hpp"

namespace policylab::cli {

using nlohmann::json;

enum class Command { gen, ewm, eval, design, plan, bounds, rate };

std::string_view to_string(Command c) noexcept;
Command parse_command(std::string_view name);

/// Process exit statuses, one per failure kind.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kParse = 3,
  kIo = 4,
  kConfig = 5,
  kParameter = 6,
  kOverlap = 7,
  kDomain = 8,
};

struct RunConfig {
  Command command = Command::gen;

  std::filesystem::path spec_path;     // gen, rate
  std::filesystem::path data_path;     // ewm, eval, design
  std::filesystem::path problem_path;  // plan, bounds
  std::filesystem::path out_path;      // empty: print to stdout
  std::filesystem::path plot_path;     // eval, design: long-format plot data

  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: POLICYLAB_THREADS, then hardware concurrency

  // Sample constants; when unset they are taken from the data.
  std::optional<double> overlap_k;
  std::optional<double> outcome_bound_M;

  // gen
  std::size_t n = 1000;

  // ewm, eval, rate
  PolicyKind policy_class = PolicyKind::augmented;
  std::vector<PolicyKind> classes{PolicyKind::random, PolicyKind::covariate_based, PolicyKind::augmented};
  int grid_quantiles = 10;
  std::optional<int> vc_dimension;
  /// Measurements averaged into the proxy; 0 averages all available.
  int proxy_t = 0;

  // eval, design
  std::size_t B = 100;
  double est_fraction = 0.6;

  // design
  std::vector<double> budgets;
  std::vector<int> t_grid;
  double cn = 0.75;
  double ct = 0.25;
  std::size_t R = 30;

  // rate
  std::vector<std::size_t> n_grid{250, 1000, 4000, 16000};
  std::size_t reps = 200;

  BoundConstants constants;
};

json to_json(const RunConfig& c);
json to_json(const BoundConstants& c);

/// DgpSpec JSON: {"family": ..., "seed": ..., "params": {...}}. Unknown
/// parameter names are rejected.
DgpSpec dgp_spec_from_json(const json& j);
json to_json(const DgpSpec& spec);

DesignProblem design_problem_from_json(const json& j, const BoundConstants& constants);
json to_json(const DesignProblem& p);
json to_json(const DesignChoice& c);

/// Thresholds with kNoThreshold written as null.
json to_json(const ThresholdRule& rule);
ThresholdRule rule_from_json(const json& j);

json to_json(const ReplicationReport& r);
json to_json(const DesignFrontier& f);

/// "600:2000:200" (inclusive) or a comma list.
std::vector<double> parse_budget_list(std::string_view text);
/// "0..5" (inclusive) or a comma list.
std::vector<int> parse_int_range(std::string_view text);
std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<PolicyKind> parse_class_list(std::string_view text);

/// Frontier CSV: budget,t,n_feasible,mean_welfare,is_optimal.
std::string frontier_csv(const DesignFrontier& f);

/// Long-format plot data with header x,series,value. Replication reports give
/// the sorted welfare and its empirical CDF per rule; frontiers give one row
/// per (budget, t) with series "budget=<B0>".
std::string export_plot_data(const ReplicationReport& r);
std::string export_plot_data(const DesignFrontier& f);

/// Reads the data CSV and applies the sample constants: k defaults to the
/// smallest min(e, 1-e), M to twice the largest |y|.
Dataset load_dataset(const RunConfig& c);

/// Averages `proxy_t` measurements (all when 0) into the proxy. Units without
/// any measurement get kNoThreshold, so augmented rules never treat them.
Dataset attach_proxy(const Dataset& d, int proxy_t);

/// Runs the command and writes its artifacts. Errors propagate as exceptions.
void run(const RunConfig& c);

/// Runs the command; on failure prints a JSON error object to `err` and
/// returns the matching exit code.
int dispatch(const RunConfig& c, std::ostream& err);

json error_json(std::string_view kind, std::string_view message, int code);

}  // namespace policylab::cli
