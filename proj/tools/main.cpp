#include "harness.hpp"

#include "rotorgw/error.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <memory>

namespace hz = rotorgw::harness;

namespace {

struct Flags {
  std::string xi, q, depth, seeds, out, config, summary;
  std::uint64_t n = 0;
  unsigned jobs = 0;
  std::size_t grid = 0;
  double tol = 0.0;
  int max_iter = 0;
  std::size_t max_nodes = 0;
  int max_H = 0;
};

struct Options {
  CLI::Option* xi = nullptr;
  CLI::Option* q = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* depth = nullptr;
  CLI::Option* seeds = nullptr;
  CLI::Option* jobs = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* grid = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* max_iter = nullptr;
  CLI::Option* max_nodes = nullptr;
  CLI::Option* max_H = nullptr;
};

void add_common(CLI::App* cmd, Flags& f, Options& o) {
  o.xi = cmd->add_option("--xi", f.xi, "offspring law, e.g. p3=1 or p1=1/2,p3=1/2");
  o.q = cmd->add_option("--q", f.q, "rotor matrix: uniform or rows:q10,q11;q20,q21,q22;...");
  o.n = cmd->add_option("--n", f.n, "walks / particles / trials per seed");
  o.depth = cmd->add_option("--depth", f.depth, "adaptive or fixed:<H>");
  o.seeds = cmd->add_option("--seeds", f.seeds, "seed, list a,b,c or count@base");
  o.jobs = cmd->add_option("--jobs", f.jobs, "parallel trials");
  o.out = cmd->add_option("--out", f.out, "output file (default stdout)");
  o.grid = cmd->add_option("--grid", f.grid, "CDF grid size G");
  o.tol = cmd->add_option("--tol", f.tol, "fixed-point tolerance (sup norm)");
  o.max_iter = cmd->add_option("--max-iter", f.max_iter, "fixed-point iteration cap");
  o.max_nodes = cmd->add_option("--max-nodes", f.max_nodes, "per-tree node budget");
  o.max_H = cmd->add_option("--max-H", f.max_H, "adaptive depth cap");
  cmd->add_option("--config", f.config, "JSON config file; explicit flags win")->check(CLI::ExistingFile);
}

hz::ExperimentConfig resolve(const Flags& f, const Options& o) {
  hz::ExperimentConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw rotorgw::ValidationError("cannot parse " + f.config + ": " + e.what());
    }
    c.merge_json(j);
  }
  if (o.xi->count()) c.xi = f.xi;
  if (o.q->count()) c.q = f.q;
  if (o.n->count()) c.n = f.n;
  if (o.depth->count()) c.depth = hz::DepthPolicy::parse(f.depth);
  if (o.seeds->count()) c.seeds = hz::parse_seeds(f.seeds);
  if (o.jobs->count()) c.jobs = f.jobs;
  if (o.out->count()) c.out = f.out;
  if (o.grid->count()) c.grid = f.grid;
  if (o.tol->count()) c.tol = f.tol;
  if (o.max_iter->count()) c.max_iter = f.max_iter;
  if (o.max_nodes->count()) c.max_nodes = f.max_nodes;
  if (o.max_H->count()) c.max_H = f.max_H;
  return c;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw rotorgw::ValidationError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int run(const std::string& name, const hz::ExperimentConfig& config, const std::string& summary_path) {
  if (name == "classify") {
    config.validate();
    Output out(config.out);
    out.stream() << hz::cmd_classify(config).dump(2) << '\n';
    return hz::kOk;
  }
  if (name == "escape-rate") {
    const hz::EscapeReport report = hz::run_escape_rate(config);
    Output out(config.out);
    hz::write_escape_report(out.stream(), config, report);
    const std::string dump = hz::escape_summary(config, report).dump(2);
    std::string path = summary_path;
    if (path.empty() && !config.out.empty()) path = config.out + ".summary.json";
    if (path.empty()) {
      std::cerr << dump << '\n';
    } else {
      Output summary(path);
      summary.stream() << dump << '\n';
    }
    return report.flagged ? hz::kFlagged : hz::kOk;
  }
  if (name == "frontier") {
    const hz::FrontierReport report = hz::run_frontier(config);
    Output out(config.out);
    hz::write_frontier_report(out.stream(), config, report);
    return hz::kOk;
  }
  if (name == "gamma-cdf") {
    const rotorgw::FixedPointResult result = hz::run_gamma_cdf(config);
    Output out(config.out);
    hz::write_gamma_cdf(out.stream(), config, result);
    if (!result.converged) {
      std::cerr << "gamma-cdf: no sup-norm convergence within " << result.iterations << " iterations (last change "
                << result.history.back() << ")\n";
    }
    return result.converged ? hz::kOk : hz::kFlagged;
  }

  const hz::AbelianReport report = hz::run_abelian_check(config);
  Output out(config.out);
  out.stream() << hz::abelian_summary(config, report).dump(2) << '\n';
  return report.mismatches || report.exceptions ? hz::kFlagged : hz::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotor-router walks on Galton-Watson trees"};
  app.set_version_flag("--version", std::string("rotorgw ") + hz::kVersion);
  app.require_subcommand(1);

  Flags f;
  std::vector<std::pair<CLI::App*, Options>> commands;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"classify", "recurrence/transience verdict from E[nu]"},
           {"escape-rate", "escape counts E_n per seed"},
           {"frontier", "frontier process with proportion audit"},
           {"gamma-cdf", "fixed point of the CDF operator"},
           {"abelian-check", "scheduler independence on random finite trees"}}) {
    auto* cmd = app.add_subcommand(name, help);
    Options opts;
    add_common(cmd, f, opts);
    if (name == "escape-rate") {
      cmd->add_option("--summary", f.summary, "summary JSON path (default <out>.summary.json, else stderr)");
    }
    commands.emplace_back(cmd, opts);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hz::kValidation;
  }

  try {
    for (auto& [cmd, opts] : commands) {
      if (!cmd->parsed()) continue;
      return run(cmd->get_name(), resolve(f, opts), f.summary);
    }
  } catch (const rotorgw::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hz::kValidation;
  } catch (const rotorgw::BudgetExceeded& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return hz::kFlagged;
  }
  return hz::kValidation;
}
