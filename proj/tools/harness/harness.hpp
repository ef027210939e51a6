#pragma once

#include "rotorgw/frontier.hpp"
#include "rotorgw/gw_tree.hpp"
#include "rotorgw/rotor_config.hpp"
#include "rotorgw/rotor_walk.hpp"
#include "rotorgw/srw_gamma.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rotorgw::harness {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kFlagged = 3 };

struct DepthPolicy {
  bool adaptive = true;
  int H = 0;  // fixed depth when !adaptive

  static DepthPolicy parse(std::string_view spec);  // "adaptive" | "fixed:<H>"
  std::string describe() const;
};

// "7", "1,2,3" or "<count>@<base>" (count seeds starting at base).
std::vector<std::uint64_t> parse_seeds(std::string_view spec);

struct ExperimentConfig {
  std::string xi = "p3=1";
  std::string q = "uniform";
  std::uint64_t n = 1000;
  DepthPolicy depth;
  std::vector<std::uint64_t> seeds{1};
  unsigned jobs = 1;
  std::string out;  // empty: stdout
  std::size_t grid = kDefaultGrid;
  double tol = 1e-6;
  int max_iter = 200;
  std::size_t max_nodes = kDefaultMaxNodes;
  int max_H = 1024;

  OffspringDistribution offspring() const { return OffspringDistribution::parse(xi); }
  RotorMatrix rotors() const { return RotorMatrix::parse(q); }

  // Checks every spec against its module's invariants.
  void validate() const;

  nlohmann::json to_json() const;
  // Keys missing from j keep their current values.
  void merge_json(const nlohmann::json& j);
};

// "# rotorgw <version>" and "# config <json>" lines.
void write_metadata(std::ostream& out, const ExperimentConfig& config);

// Runs fn(i) for i in [0, count) on `jobs` threads. Results must be stored
// by index; output order never depends on the thread count.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

nlohmann::json cmd_classify(const ExperimentConfig& config);

struct EscapeRow {
  std::uint64_t seed = 0;
  EscapeStats stats;
  std::vector<std::pair<int, std::uint64_t>> history;
  bool converged = true;
  GammaBounds gamma;  // on gamma of the tree, cut at gamma.H
};

struct EscapeReport {
  std::vector<EscapeRow> rows;
  double mean_ratio = 0.0;
  bool flagged = false;  // a run aborted or adaptive H did not settle
};

EscapeReport run_escape_rate(const ExperimentConfig& config);
void write_escape_report(std::ostream& csv, const ExperimentConfig& config, const EscapeReport& report);
nlohmann::json escape_summary(const ExperimentConfig& config, const EscapeReport& report);

struct FrontierRow {
  std::uint64_t seed = 0;
  FrontierState state;  // counters only; the member mask is dropped
  ProportionAudit audit;
  double path_ratio = 0.0;  // boundary/path ratio along the root path to the deepest member
};

struct FrontierReport {
  std::vector<FrontierRow> rows;  // n = 1, 2, 4, ... per seed, sorted by seed
  bool all_hold = true;
};

FrontierReport run_frontier(const ExperimentConfig& config);
void write_frontier_report(std::ostream& csv, const ExperimentConfig& config, const FrontierReport& report);

FixedPointResult run_gamma_cdf(const ExperimentConfig& config);
void write_gamma_cdf(std::ostream& csv, const ExperimentConfig& config, const FixedPointResult& result);

struct AbelianTrial {
  std::size_t nodes = 0;
  std::uint64_t particles = 0;
  bool match = false;
  std::string error;
};

// One randomized instance: a finite tree of at most max_nodes vertices,
// random rotors, up to max_particles particles, two random schedulers.
AbelianTrial abelian_trial(std::uint64_t seed, std::size_t max_nodes = 200, std::uint64_t max_particles = 50);

struct AbelianReport {
  std::vector<AbelianTrial> trials;
  std::size_t mismatches = 0;
  std::size_t exceptions = 0;
};

// config.n trials per seed.
AbelianReport run_abelian_check(const ExperimentConfig& config);
nlohmann::json abelian_summary(const ExperimentConfig& config, const AbelianReport& report);

}  // namespace rotorgw::harness
