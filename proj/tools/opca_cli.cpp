#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "opca/analysis.hpp"
#include "opca/capped_simplex.hpp"
#include "opca/game.hpp"

namespace {

using opca::format_sig12;
using opca::GameConfig;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(text.substr(0, dots));
    const std::uint64_t hi = std::stoull(text.substr(dots + 2));
    if (hi < lo) throw CLI::ValidationError("--seeds", "range must be ascending");
    if (hi - lo >= 1000000) {
      throw CLI::ValidationError("--seeds", "range is implausibly large");
    }
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
  return seeds;
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Flat `key = value` config file, turned into `--key=value` arguments that
// are parsed ahead of the explicit flags; every option takes its last
// occurrence, so flags given on the command line win.
std::vector<std::string> load_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line is not `key = value`: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw std::runtime_error("config line has no key: " + line);
    if (key == "config") {
      throw std::runtime_error("config files cannot nest other config files");
    }
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Writes to the --out path when given, otherwise to stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Shared game-configuration flags; every field set here can also come from a
// flat `key = value` config file passed with --config.
struct GameFlags {
  GameConfig config;
  long horizon = -1;
  long budget = -1;
  std::string eta = "auto";
  std::vector<double> eta_sweep;
  std::string seeds = "0";
  std::string out;

  void attach(CLI::App* cmd, bool with_adversary) {
    cmd->add_option("--n", config.n, "problem dimension")->required();
    cmd->add_option("--k", config.k, "kept-subspace size")->required();
    CLI::Option* h = cmd->add_option("--horizon", horizon, "trials to play");
    CLI::Option* b =
        cmd->add_option("--budget", budget, "comparator loss budget");
    h->excludes(b);
    b->excludes(h);
    cmd->add_option("--regime", config.regime, "loss regime")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, opca::Regime>{
                {"sparse", opca::Regime::kSparse},
                {"dense", opca::Regime::kDense}},
            CLI::ignore_case));
    cmd->add_option("--algorithm", config.algorithm, "online algorithm")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, opca::AlgorithmId>{
                {"loss-meg", opca::AlgorithmId::kLossMeg},
                {"gain-meg", opca::AlgorithmId::kGainMeg},
                {"gd", opca::AlgorithmId::kGd}},
            CLI::ignore_case));
    if (with_adversary) {
      cmd->add_option("--adversary", config.adversary, "loss sequence source")
          ->transform(CLI::CheckedTransformer(
              std::map<std::string, opca::AdversaryId>{
                  {"first2k", opca::AdversaryId::kFirst2k},
                  {"uniform", opca::AdversaryId::kUniform},
                  {"dense-bernoulli", opca::AdversaryId::kDenseBernoulli},
                  {"gd-killer", opca::AdversaryId::kGdKiller}},
              CLI::ignore_case));
      cmd->add_option("--loss-mode", config.loss_mode,
                      "how the learner's per-trial loss is charged")
          ->transform(CLI::CheckedTransformer(
              std::map<std::string, opca::LossMode>{
                  {"expected", opca::LossMode::kExpected},
                  {"sampled", opca::LossMode::kSampled}},
              CLI::ignore_case));
      cmd->add_option("--representation", config.representation,
                      "run the learner on weight vectors or density matrices")
          ->transform(CLI::CheckedTransformer(
              std::map<std::string, opca::Representation>{
                  {"vector", opca::Representation::kVector},
                  {"matrix", opca::Representation::kMatrix}},
              CLI::ignore_case));
    }
    CLI::Option* e =
        cmd->add_option("--eta", eta, "step size value, or 'auto' to tune");
    CLI::Option* es = cmd->add_option("--eta-sweep", eta_sweep,
                                      "comma-separated step sizes to sweep")
                          ->delimiter(',');
    e->excludes(es);
    es->excludes(e);
    cmd->add_option("--seeds", seeds, "seed list 's1,s2,...' or range 's1..s2'");
    cmd->add_option("--out", out, "write CSV here instead of stdout");
  }

  GameConfig resolve() {
    if (horizon >= 0 && budget >= 0) {
      throw std::invalid_argument("give either --horizon or --budget, not both");
    }
    if (horizon >= 0) {
      config.mode = opca::GameMode::kHorizon;
      config.horizon = horizon;
    } else if (budget >= 0) {
      config.mode = opca::GameMode::kBudget;
      config.budget = budget;
    } else {
      throw std::invalid_argument("one of --horizon or --budget is required");
    }
    if (!eta_sweep.empty()) {
      config.eta_policy = opca::EtaPolicy::kSweep;
      config.eta_sweep = eta_sweep;
    } else if (eta == "auto") {
      config.eta_policy = opca::EtaPolicy::kAuto;
    } else {
      config.eta_policy = opca::EtaPolicy::kExplicit;
      config.eta = std::stod(eta);
    }
    config.seeds = parse_seeds(seeds);
    return config;
  }
};

int cmd_run(GameFlags& flags) {
  GameConfig c = flags.resolve();
  OutputTarget out(flags.out);
  bool first = true;
  for (std::uint64_t seed : c.seeds) {
    opca::RegretTrace tr = opca::run_game(c, seed);
    if (first) {
      opca::write_trace_csv(out.stream(), seed, tr);
      first = false;
    } else {
      std::ostringstream block;
      opca::write_trace_csv(block, seed, tr);
      const std::string text = block.str();
      out.stream() << text.substr(text.find('\n') + 1);
    }
  }
  return 0;
}

int cmd_estimate(GameFlags& flags) {
  GameConfig c = flags.resolve();
  OutputTarget out(flags.out);
  if (c.eta_policy == opca::EtaPolicy::kSweep) {
    std::vector<opca::SweepEntry> entries = opca::sweep_eta(c);
    out.stream() << "eta,mean_regret,std_error\n";
    for (const opca::SweepEntry& e : entries) {
      out.stream() << format_sig12(e.eta) << ',' << format_sig12(e.mean_regret)
                   << ',' << format_sig12(e.std_error) << '\n';
    }
    return 0;
  }
  opca::EstimateResult r = opca::estimate_regret(c);
  opca::write_estimate_csv(out.stream(), r);
  std::cerr << "mean_regret=" << format_sig12(r.mean_regret)
            << " std_error=" << format_sig12(r.std_error)
            << " seeds=" << r.per_seed.size() << " eta=" << format_sig12(r.eta)
            << '\n';
  return 0;
}

int cmd_bounds(GameFlags& flags, const std::vector<int>& k_sweep, bool measure) {
  GameConfig base = flags.resolve();
  std::vector<int> ks = k_sweep.empty() ? std::vector<int>{base.k} : k_sweep;
  const opca::AlgorithmId algs[] = {opca::AlgorithmId::kLossMeg,
                                    opca::AlgorithmId::kGainMeg,
                                    opca::AlgorithmId::kGd};
  std::vector<GameConfig> grid;
  for (int k : ks) {
    for (opca::AlgorithmId alg : algs) {
      GameConfig c = base;
      c.k = k;
      c.algorithm = alg;
      grid.push_back(c);
    }
  }
  std::vector<opca::BoundRow> rows = opca::bound_report(grid, measure);
  OutputTarget out(flags.out);
  opca::write_bound_report_csv(out.stream(), rows);
  return 0;
}

int cmd_project(const std::vector<double>& weights, int m,
                const std::string& scheme, const std::string& out_path) {
  Eigen::VectorXd v(static_cast<int>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    v[static_cast<int>(i)] = weights[i];
  }
  opca::WeightVector w =
      scheme == "euclidean" ? opca::euclidean_project(v, m)
                            : opca::entropic_project(v, m);
  OutputTarget out(out_path);
  for (int i = 0; i < w.w.size(); ++i) {
    out.stream() << (i ? "," : "") << format_sig12(w.w[i]);
  }
  out.stream() << '\n';
  return 0;
}

int cmd_lemma_two_expert(long trials, double p, long replicates,
                         std::uint64_t seed, const std::string& out_path) {
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  for (long r = 0; r < replicates; ++r) {
    sum += opca::two_expert_game_winner_sample(trials, p, rng);
  }
  const double mean = sum / static_cast<double>(replicates);
  const double expected_hits = static_cast<double>(trials) * p;
  const double c = (expected_hits - mean) / std::sqrt(expected_hits);
  OutputTarget out(out_path);
  out.stream() << "trials,p,replicates,mean_winner_loss,expected_hits,deficit_c\n"
               << trials << ',' << format_sig12(p) << ',' << replicates << ','
               << format_sig12(mean) << ',' << format_sig12(expected_hits)
               << ',' << format_sig12(c) << '\n';
  return 0;
}

int cmd_lemma_bracket(int n, int rounds, long trials, const std::string& generator,
                      double p, long replicates, std::uint64_t seed,
                      const std::string& out_path) {
  if (rounds < 1 || (1 << rounds) != n) {
    throw std::invalid_argument("bracket experiment needs n = 2^rounds");
  }
  if (trials % rounds != 0) {
    throw std::invalid_argument("bracket experiment needs rounds to divide trials");
  }
  const long restricted = trials / rounds;
  std::mt19937_64 rng(seed);
  double lhs_sum = 0.0, lhs_sq = 0.0, rhs_sum = 0.0, rhs_sq = 0.0;
  for (long r = 0; r < replicates; ++r) {
    const opca::LossMatrix full =
        generator == "single-hit"
            ? opca::single_hit_matrix(n, trials, p, rng)
            : opca::bernoulli_matrix(n, trials, p, rng);
    const double lhs = opca::best_mset_loss(full, 1);
    double rhs;
    if (generator == "single-hit") {
      rhs = static_cast<double>(rounds) *
            opca::two_expert_game_winner_sample(restricted, p * 2.0 / n, rng);
    } else {
      const opca::LossMatrix pair = opca::bernoulli_matrix(2, restricted, p, rng);
      rhs = static_cast<double>(rounds) * opca::two_expert_winner_loss(pair);
    }
    lhs_sum += lhs;
    lhs_sq += lhs * lhs;
    rhs_sum += rhs;
    rhs_sq += rhs * rhs;
  }
  const double nr = static_cast<double>(replicates);
  const double lhs_mean = lhs_sum / nr, rhs_mean = rhs_sum / nr;
  const double lhs_var = lhs_sq / nr - lhs_mean * lhs_mean;
  const double rhs_var = rhs_sq / nr - rhs_mean * rhs_mean;
  const double se = std::sqrt(lhs_var / nr + rhs_var / nr);
  const bool holds = lhs_mean <= rhs_mean + 3.0 * se;
  OutputTarget out(out_path);
  out.stream() << "generator,n,rounds,trials,replicates,mean_best_loss,"
                  "mean_bracket_sum,se_combined,within_3se\n"
               << generator << ',' << n << ',' << rounds << ',' << trials << ','
               << replicates << ',' << format_sig12(lhs_mean) << ','
               << format_sig12(rhs_mean) << ',' << format_sig12(se) << ','
               << (holds ? 1 : 0) << '\n';
  return holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online m-set / subspace regret experiments"};
  app.require_subcommand(1);

  std::string config_path;
  const auto add_subcommand = [&](const std::string& name,
                                  const std::string& desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", config_path,
                    "flat `key = value` file; explicit flags win");
    return cmd;
  };

  GameFlags run_flags;
  CLI::App* run = add_subcommand("run", "play one game per seed, CSV per trial");
  run_flags.attach(run, true);

  GameFlags est_flags;
  CLI::App* estimate =
      add_subcommand("estimate", "multi-seed regret estimate, CSV per seed");
  est_flags.attach(estimate, true);

  GameFlags bounds_flags;
  std::vector<int> k_sweep;
  bool measure = false;
  CLI::App* bounds =
      add_subcommand("bounds", "closed-form guarantees, optionally measured");
  bounds_flags.attach(bounds, true);
  bounds->add_option("--k-sweep", k_sweep, "comma-separated k grid")
      ->delimiter(',');
  bounds->add_flag("--measure", measure,
                   "also estimate mean regret for every grid row");

  std::vector<double> weights;
  int project_m = 1;
  std::string scheme = "euclidean";
  std::string project_out;
  CLI::App* project =
      add_subcommand("project", "project a weight vector (debug)");
  project->add_option("--weights", weights, "comma-separated input vector")
      ->delimiter(',')
      ->required();
  project->add_option("--m", project_m, "target total weight")->required();
  project->add_option("--scheme", scheme, "euclidean or entropic")
      ->check(CLI::IsMember({"euclidean", "entropic"}));
  project->add_option("--out", project_out, "write output here instead of stdout");

  std::string experiment;
  int lemma_n = 8, lemma_rounds = 3;
  long lemma_trials = 96, lemma_replicates = 10000;
  double lemma_p = 0.125;
  std::string lemma_generator = "single-hit";
  std::uint64_t lemma_seed = 0;
  std::string lemma_out;
  CLI::App* lemma =
      add_subcommand("lemma", "two-expert and bracket Monte-Carlo experiments");
  lemma->add_option("--experiment", experiment, "two-expert or bracket")
      ->check(CLI::IsMember({"two-expert", "bracket"}))
      ->required();
  lemma->add_option("--n", lemma_n, "experts (bracket; must be 2^rounds)");
  lemma->add_option("--rounds", lemma_rounds, "bracket rounds");
  lemma->add_option("--trials", lemma_trials, "trials per replicate");
  lemma->add_option("--p", lemma_p, "per-trial hit probability");
  lemma->add_option("--replicates", lemma_replicates, "Monte-Carlo replicates");
  lemma->add_option("--generator", lemma_generator, "single-hit or bernoulli")
      ->check(CLI::IsMember({"single-hit", "bernoulli"}));
  lemma->add_option("--seed", lemma_seed, "rng seed");
  lemma->add_option("--out", lemma_out, "write output here instead of stdout");

  try {
    // Expand a --config file into synthesized arguments placed before the
    // explicit flags: with take-last option policy, the flags override it.
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && app.get_subcommand_no_throw(args[0]) != nullptr) {
      std::string path;
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
          path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
          path = args[i].substr(9);
        }
      }
      if (!path.empty()) {
        std::vector<std::string> synthesized = load_flat_config(path);
        args.insert(args.begin() + 1, synthesized.begin(), synthesized.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (estimate->parsed()) return cmd_estimate(est_flags);
    if (bounds->parsed()) return cmd_bounds(bounds_flags, k_sweep, measure);
    if (project->parsed()) {
      return cmd_project(weights, project_m, scheme, project_out);
    }
    if (lemma->parsed()) {
      if (experiment == "two-expert") {
        return cmd_lemma_two_expert(lemma_trials, lemma_p, lemma_replicates,
                                    lemma_seed, lemma_out);
      }
      return cmd_lemma_bracket(lemma_n, lemma_rounds, lemma_trials,
                               lemma_generator, lemma_p, lemma_replicates,
                               lemma_seed, lemma_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
