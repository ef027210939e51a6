#include "harness.hpp"

#include "rotorgw/error.hpp"
#include "rotorgw/keyed_rng.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace rotorgw::harness {

namespace {

std::uint64_t parse_u64(std::string_view text, const char* what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ValidationError(std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::string trim(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::string format_double(double v, int precision = 12) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

// Deepest depth at which a full streaming pass stays near 2^23 vertices.
int gamma_depth(const OffspringDistribution& xi, int H) {
  if (xi.mean() <= 1.0 + 1e-12) return H;
  const int cap = static_cast<int>(std::floor(23.0 * std::log(2.0) / std::log(xi.mean())));
  return std::clamp(cap, 1, H);
}

}  // namespace

DepthPolicy DepthPolicy::parse(std::string_view spec) {
  const std::string s = trim(spec);
  if (s == "adaptive") return {};
  constexpr std::string_view kFixed = "fixed:";
  if (s.rfind(kFixed, 0) == 0) {
    const auto H = parse_u64(std::string_view(s).substr(kFixed.size()), "depth");
    if (H < 1 || H > 65534) throw ValidationError("fixed depth must be in 1..65534");
    return {false, static_cast<int>(H)};
  }
  throw ValidationError("depth policy must be 'adaptive' or 'fixed:<H>', got '" + std::string(spec) + "'");
}

std::string DepthPolicy::describe() const { return adaptive ? "adaptive" : "fixed:" + std::to_string(H); }

std::vector<std::uint64_t> parse_seeds(std::string_view spec) {
  const std::string s = trim(spec);
  if (s.empty()) throw ValidationError("empty seed list");
  std::vector<std::uint64_t> seeds;
  if (const auto at = s.find('@'); at != std::string::npos) {
    const auto count = parse_u64(std::string_view(s).substr(0, at), "seed count");
    const auto base = parse_u64(std::string_view(s).substr(at + 1), "seed base");
    if (count == 0) throw ValidationError("seed count must be positive");
    for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(base + i);
  } else {
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      seeds.push_back(parse_u64(std::string_view(s).substr(pos, comma - pos), "seed"));
      pos = comma + 1;
    }
  }
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end()) throw ValidationError("duplicate seeds");
  return seeds;
}

void ExperimentConfig::validate() const {
  const OffspringDistribution dist = offspring();
  const RotorMatrix rot = rotors();
  if (rot.k_max() < dist.k_max()) throw ValidationError("rotor matrix does not cover the offspring support");
  if (n == 0) throw ValidationError("n must be >= 1");
  if (seeds.empty()) throw ValidationError("no seeds");
  if (jobs == 0) throw ValidationError("jobs must be >= 1");
  if (grid < 2) throw ValidationError("grid must be >= 2");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (max_H < 8) throw ValidationError("max_H must be >= 8");
}

nlohmann::json ExperimentConfig::to_json() const {
  // jobs is left out: results do not depend on it
  return nlohmann::json{{"xi", xi},     {"q", q},       {"n", n},
                        {"depth", depth.describe()},    {"seeds", seeds},
                        {"grid", grid}, {"tol", tol},   {"max_iter", max_iter},
                        {"max_nodes", max_nodes},       {"max_H", max_H}};
}

void ExperimentConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "xi") {
        xi = value.get<std::string>();
      } else if (key == "q") {
        q = value.get<std::string>();
      } else if (key == "n") {
        n = value.get<std::uint64_t>();
      } else if (key == "depth") {
        depth = DepthPolicy::parse(value.get<std::string>());
      } else if (key == "seeds") {
        if (value.is_array()) {
          seeds = value.get<std::vector<std::uint64_t>>();
        } else if (value.is_number_unsigned()) {
          seeds = {value.get<std::uint64_t>()};
        } else {
          seeds = parse_seeds(value.get<std::string>());
        }
      } else if (key == "jobs") {
        jobs = value.get<unsigned>();
      } else if (key == "out") {
        out = value.get<std::string>();
      } else if (key == "grid") {
        grid = value.get<std::size_t>();
      } else if (key == "tol") {
        tol = value.get<double>();
      } else if (key == "max_iter") {
        max_iter = value.get<int>();
      } else if (key == "max_nodes") {
        max_nodes = value.get<std::size_t>();
      } else if (key == "max_H") {
        max_H = value.get<int>();
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config file: ") + e.what());
  }
}

void write_metadata(std::ostream& out, const ExperimentConfig& config) {
  out << "# rotorgw " << kVersion << '\n';
  out << "# config " << config.to_json().dump() << '\n';
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nlohmann::json cmd_classify(const ExperimentConfig& config) {
  const Classification c = classify(config.offspring(), config.rotors());
  nlohmann::json nu = c.law.probs;
  return {{"E_nu", c.mean_nu},
          {"verdict", to_string(c.verdict)},
          {"exact", c.exact},
          {"degenerate_nu", c.degenerate},
          {"E_nu_exact", c.law.exact_mean ? to_string(*c.law.exact_mean) : std::string()},
          {"nu", nu},
          {"xi", config.offspring().describe()},
          {"q", config.rotors().describe()},
          {"version", kVersion}};
}

EscapeReport run_escape_rate(const ExperimentConfig& config) {
  config.validate();
  const OffspringDistribution xi = config.offspring();
  const RotorMatrix q = config.rotors();
  EscapeReport report;
  report.rows.resize(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    EscapeRow& row = report.rows[i];
    row.seed = config.seeds[i];
    TreeArena arena(xi, row.seed, config.max_nodes);
    if (config.depth.adaptive) {
      AdaptivePolicy policy;
      policy.max_H = config.max_H;
      AdaptiveEscape a = escape_count_adaptive(arena, q, config.n, policy);
      row.stats = std::move(a.stats);
      row.history = std::move(a.history);
      row.converged = a.converged;
    } else {
      row.stats = escape_count(arena, q, config.n, config.depth.H);
      row.history = {{row.stats.H, row.stats.escapes}};
    }
    row.gamma = gamma_bounds(arena.keyed(), gamma_depth(xi, row.stats.H));
  });
  double sum = 0.0;
  for (const EscapeRow& row : report.rows) {
    sum += row.stats.ratio();
    report.flagged = report.flagged || !row.stats.complete || !row.converged;
  }
  report.mean_ratio = sum / static_cast<double>(report.rows.size());
  return report;
}

void write_escape_report(std::ostream& csv, const ExperimentConfig& config, const EscapeReport& report) {
  write_metadata(csv, config);
  for (const EscapeRow& row : report.rows) {
    csv << "# seed " << row.seed << " H-history";
    for (const auto& [H, e] : row.history) csv << ' ' << H << ':' << e;
    csv << (row.converged ? "" : " (not settled)");
    if (!row.stats.complete) csv << " aborted after " << row.stats.n << " walks: " << row.stats.abort_reason;
    csv << '\n';
  }
  write_escape_csv_header(csv);
  for (const EscapeRow& row : report.rows) write_escape_csv_row(csv, row.seed, row.stats);
}

nlohmann::json escape_summary(const ExperimentConfig& config, const EscapeReport& report) {
  nlohmann::json trees = nlohmann::json::array();
  for (const EscapeRow& row : report.rows) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [H, e] : row.history) hist.push_back({{"H", H}, {"E_n", e}});
    trees.push_back({{"seed", row.seed},
                     {"n", row.stats.n},
                     {"H", row.stats.H},
                     {"E_n", row.stats.escapes},
                     {"ratio", row.stats.ratio()},
                     {"complete", row.stats.complete},
                     {"H_settled", row.converged},
                     {"H_history", hist},
                     {"gamma_lower", row.gamma.lower},
                     {"gamma_upper", row.gamma.upper},
                     {"gamma_depth", row.gamma.H}});
  }
  return {{"version", kVersion},
          {"config", config.to_json()},
          {"mean_ratio", report.mean_ratio},
          {"flagged", report.flagged},
          {"trees", trees}};
}

FrontierReport run_frontier(const ExperimentConfig& config) {
  config.validate();
  const OffspringDistribution xi = config.offspring();
  const RotorMatrix q = config.rotors();
  std::vector<std::vector<FrontierRow>> per_seed(config.seeds.size());
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    TreeArena arena(xi, seed, config.max_nodes);
    std::uint64_t next = 1;
    build_frontier(arena, q, config.n, [&](const FrontierState& st) {
      if (st.n != next && st.n != config.n) return;
      if (st.n == next) next *= 2;
      FrontierRow row;
      row.seed = seed;
      row.audit = audit_proportion(arena, st);
      row.state = st;
      row.state.member.clear();
      row.state.member.shrink_to_fit();
      if (st.realized_height > 0) {
        NodeId deepest = TreeArena::root();
        for (std::size_t x = 0; x < st.member.size(); ++x) {
          if (st.member[x] && arena.node(static_cast<NodeId>(x)).depth == st.realized_height) {
            deepest = static_cast<NodeId>(x);
            break;
          }
        }
        if (deepest != TreeArena::root()) {
          const auto path = root_path(arena, arena.node(deepest).parent);
          row.path_ratio = path_boundary_ratio(arena, path);
        }
      }
      per_seed[i].push_back(std::move(row));
    });
  });
  FrontierReport report;
  for (auto& rows : per_seed) {
    for (auto& row : rows) {
      report.all_hold = report.all_hold && row.audit.holds;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_frontier_report(std::ostream& csv, const ExperimentConfig& config, const FrontierReport& report) {
  write_metadata(csv, config);
  csv << "# realized_height is the deepest level reached in this run, a lower bound for M(n)\n";
  write_frontier_csv_header(csv);
  csv << ",seed,h_root,sink_ratio,K,K_closed,K_flux,proportion_ok,frontier_per_n,height_per_n,path_boundary_ratio\n";
  for (const FrontierRow& row : report.rows) {
    const double n = static_cast<double>(row.state.n);
    write_frontier_csv_row(csv, row.state);
    csv << ',' << row.seed << ',' << format_double(row.audit.h_root) << ',' << format_double(row.audit.ratio) << ','
        << format_double(row.audit.K) << ',' << format_double(row.audit.K_closed) << ','
        << format_double(row.audit.K_flux) << ',' << (row.audit.holds ? "true" : "false") << ','
        << format_double(static_cast<double>(row.state.frontier_size) / n) << ','
        << format_double(static_cast<double>(row.state.realized_height) / n) << ','
        << format_double(row.path_ratio) << '\n';
  }
}

FixedPointResult run_gamma_cdf(const ExperimentConfig& config) {
  config.validate();
  return cdf_fixed_point(config.offspring(), config.tol, config.max_iter, config.grid);
}

void write_gamma_cdf(std::ostream& csv, const ExperimentConfig& config, const FixedPointResult& result) {
  write_metadata(csv, config);
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    csv << "# iteration " << (i + 1) << " sup_change " << format_double(result.history[i]) << '\n';
  }
  csv << "# converged " << (result.converged ? "true" : "false") << " after " << result.iterations
      << " iterations\n";
  csv << "# mean " << format_double(result.cdf.mean()) << " median " << format_double(result.cdf.quantile(0.5))
      << '\n';
  result.cdf.write_csv(csv);
}

AbelianTrial abelian_trial(std::uint64_t seed, std::size_t max_nodes, std::uint64_t max_particles) {
  AbelianTrial trial;
  try {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const unsigned kmax = 1 + static_cast<unsigned>(rng() % 3);
    std::vector<double> w(kmax);
    double total = 0.0;
    for (double& x : w) total += x = 0.05 + unit(rng);
    for (double& x : w) x /= total;
    w.back() = 1.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) w.back() -= w[k];
    TreeArena arena(OffspringDistribution(w), seed, max_nodes);

    // Random separating sink set; everything created is either in T^S or in S.
    const unsigned max_depth = 2 + static_cast<unsigned>(rng() % 7);
    const double stop = 0.1 + 0.4 * unit(rng);
    std::vector<NodeId> queue{TreeArena::root()};
    std::vector<NodeId> interior;
    std::vector<NodeId> S;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const NodeId x = queue[i];
      const bool root = x == TreeArena::root();
      if (!root && (arena.node(x).depth >= max_depth || unit(rng) < stop || arena.size() + kmax > max_nodes)) {
        S.push_back(x);
        continue;
      }
      interior.push_back(x);
      const unsigned d = arena.expand(x);
      for (unsigned k = 1; k <= d; ++k) queue.push_back(arena.child(x, k));
    }
    for (NodeId x : interior) {
      arena.set_rotor(x, static_cast<unsigned>(rng() % (arena.node(x).child_count + 1)));
    }
    trial.nodes = arena.size();

    trial.particles = rng() % (max_particles + 1);
    std::vector<Placement> placement;
    if (unit(rng) < 0.5) {
      placement.push_back({TreeArena::root(), trial.particles});
    } else {
      for (std::uint64_t p = 0; p < trial.particles; ++p) placement.push_back({interior[rng() % interior.size()], 1});
    }

    const RotorMatrix q = RotorMatrix::uniform(kmax);
    TreeArena a = arena;
    TreeArena b = arena;
    const LegalResult ra = run_legal_sequence(a, S, placement, random_scheduler(rng()), q);
    const LegalResult rb = run_legal_sequence(b, S, placement, random_scheduler(rng()), q);
    trial.match = ra.absorbed == rb.absorbed && ra.at_sink == rb.at_sink && ra.rotors == rb.rotors &&
                  ra.total_absorbed() + ra.at_sink == trial.particles;
  } catch (const std::exception& e) {
    trial.error = e.what();
  }
  return trial;
}

AbelianReport run_abelian_check(const ExperimentConfig& config) {
  if (config.n == 0 || config.seeds.empty()) throw ValidationError("abelian-check needs n >= 1 and a seed");
  AbelianReport report;
  const std::size_t per_seed = config.n;
  report.trials.resize(per_seed * config.seeds.size());
  parallel_for(report.trials.size(), config.jobs, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i / per_seed];
    report.trials[i] = abelian_trial(splitmix64(seed * 0x9e3779b97f4a7c15ULL + i % per_seed));
  });
  for (const AbelianTrial& t : report.trials) {
    if (!t.error.empty()) {
      ++report.exceptions;
    } else if (!t.match) {
      ++report.mismatches;
    }
  }
  return report;
}

nlohmann::json abelian_summary(const ExperimentConfig& config, const AbelianReport& report) {
  std::size_t max_nodes = 0;
  std::uint64_t max_particles = 0;
  for (const AbelianTrial& t : report.trials) {
    max_nodes = std::max(max_nodes, t.nodes);
    max_particles = std::max(max_particles, t.particles);
  }
  return {{"version", kVersion},
          {"config", config.to_json()},
          {"trials", report.trials.size()},
          {"mismatches", report.mismatches},
          {"exceptions", report.exceptions},
          {"max_nodes", max_nodes},
          {"max_particles", max_particles}};
}

}  // namespace rotorgw::harness
