// Command-line front end: run tournaments, replay single sessions, generate
// domains, and benchmark the strategy-model kernels. All file formats are
// the JSON schemas described in the README.

#include <mocana/mocana.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

namespace {

using namespace mocana;

// Options shared by `run` and `session` that shape the search agent.
struct SearchOptions {
  int budget = 500;
  double alpha = 0.489;
  double exploration = 1.0;
  int rollout_depth = 40;
  int root_cap = 200;
  int retries = 100;
  std::string pruning = "none";
  int hypotheses = 128;
  double concession_rate = 0.002;
  double sigma = 0.25;
  std::string kernel = "rational-quadratic";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--budget", budget, "MCTS simulations per decision")
        ->capture_default_str();
    cmd.add_option("--alpha", alpha, "progressive-widening exponent")
        ->capture_default_str();
    cmd.add_option("--exploration", exploration, "UCT exploration constant")
        ->capture_default_str();
    cmd.add_option("--rollout-depth", rollout_depth, "rollout ply cap")
        ->capture_default_str();
    cmd.add_option("--root-cap", root_cap, "max root candidates")
        ->capture_default_str();
    cmd.add_option("--retries", retries, "expansion draw retries")
        ->capture_default_str();
    cmd.add_option("--pruning", pruning, "none | fixed:<threshold> | variable")
        ->capture_default_str();
    cmd.add_option("--hypotheses", hypotheses, "opponent-utility hypotheses")
        ->capture_default_str();
    cmd.add_option("--concession-rate", concession_rate,
                   "assumed opponent concession per round")
        ->capture_default_str();
    cmd.add_option("--sigma", sigma, "opponent-model likelihood width")
        ->capture_default_str();
    cmd.add_option("--kernel", kernel,
                   "rbf | rational-quadratic | matern | exp-sine-squared")
        ->capture_default_str();
  }

  MocanaConfig to_config() const {
    MocanaConfig config;
    config.mcts.simulation_budget = budget;
    config.mcts.alpha = alpha;
    config.mcts.exploration = exploration;
    config.mcts.max_rollout_depth = rollout_depth;
    config.mcts.root_candidate_cap = root_cap;
    config.mcts.expansion_retries = retries;
    if (pruning == "none") {
      config.mcts.pruning = mcts::Pruning::none();
    } else if (pruning == "variable") {
      config.mcts.pruning = mcts::Pruning::variable();
    } else if (pruning.rfind("fixed:", 0) == 0) {
      config.mcts.pruning = mcts::Pruning::fixed(std::stod(pruning.substr(6)));
    } else {
      throw CLI::ValidationError("--pruning",
                                 "expected none, variable, or fixed:<threshold>");
    }
    config.hypothesis_count = hypotheses;
    config.concession_rate = concession_rate;
    config.likelihood_sigma = sigma;
    config.kernel = gp::parse_kernel_family(kernel);
    config.mcts.validate();
    return config;
  }
};

DomainFile load_negotiation(const std::string& path) {
  DomainFile file = load_domain_file(path);
  if (file.profiles.size() < 2)
    throw std::runtime_error(path + ": need at least two profiles");
  return file;
}

int cmd_run(const std::string& domain_path, const std::string& agent1,
            const std::string& agent2, int repetitions, std::uint64_t master_seed,
            int workers, int round_bound, bool has_round_bound, double time_bound,
            bool has_time_bound, const SearchOptions& search,
            const std::string& rows_path, const std::string& summary_path) {
  const DomainFile file = load_negotiation(domain_path);

  TournamentConfig config;
  config.domain = file.domain;
  config.profiles = {file.profiles[0], file.profiles[1]};
  config.agent1 = agent1;
  config.agent2 = agent2;
  config.repetitions = repetitions;
  config.master_seed = master_seed;
  config.workers = workers;
  if (has_round_bound) config.session.round_bound = round_bound;
  if (has_time_bound) config.session.time_bound_seconds = time_bound;
  config.mocana = search.to_config();

  const TournamentReport report = run_tournament(config);
  if (!rows_path.empty()) write_rows_csv(rows_path, report.rows);
  if (!summary_path.empty())
    save_json_file(summary_path, summary_to_json(report.agents));
  std::cout << format_summary(report.agents);
  return 0;
}

int cmd_session(const std::string& domain_path, const std::string& agent1,
                const std::string& agent2, std::uint64_t seed, int round_bound,
                bool has_round_bound, double time_bound, bool has_time_bound,
                const SearchOptions& search) {
  const DomainFile file = load_negotiation(domain_path);
  const std::array<UtilityFunction, 2> profiles{file.profiles[0],
                                                file.profiles[1]};
  const MocanaConfig mocana = search.to_config();
  const auto first = make_agent(agent1, file.domain, profiles[0], mocana);
  const auto second = make_agent(agent2, file.domain, profiles[1], mocana);

  SessionConfig session;
  if (has_round_bound) session.round_bound = round_bound;
  if (has_time_bound) session.time_bound_seconds = time_bound;

  const SessionOutcome outcome =
      run_session(*first, *second, file.domain, profiles, session, seed);

  for (std::size_t i = 0; i < outcome.history.size(); ++i)
    std::printf("%3zu  player %d  %s\n", i + 1, message_player(i),
                format_message(outcome.history.messages[i]).c_str());
  std::printf("outcome: %s after %d messages\n", outcome_name(outcome.kind),
              outcome.rounds_used);
  if (outcome.agreement)
    std::printf("agreement: %s\n", format_bid(*outcome.agreement).c_str());
  if (outcome.violator) std::printf("violator: player %d\n", *outcome.violator);
  std::printf("utility %s: %.6f\nutility %s: %.6f\n", agent1.c_str(),
              outcome.utilities[0], agent2.c_str(), outcome.utilities[1]);
  return 0;
}

int cmd_gen_domain(int issues, std::uint64_t seed, const std::string& out_path) {
  const DomainFile file = generate_domain(issues, seed);
  if (out_path.empty()) {
    std::cout << domain_file_to_json(file).dump(2) << '\n';
  } else {
    save_domain_file(out_path, file);
    std::cout << "wrote " << out_path << " (" << issues << " issues)\n";
  }
  return 0;
}

int cmd_kernel_bench(const std::string& series_path, int count, int length,
                     int dims, std::uint64_t seed) {
  const auto series = series_path.empty()
                          ? synthetic_concession_series(count, length, dims, seed)
                          : load_series_file(series_path);
  std::cout << format_benchmark(kernel_benchmark(series, gp::all_kernel_families()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilateral negotiation sessions, tournaments, and benchmarks"};
  app.require_subcommand(1);

  // ---- run ----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run a seeded round-robin tournament");
  std::string run_domain, run_agent1 = "mocana", run_agent2 = "random-walker";
  std::string rows_path, summary_path;
  int repetitions = 10, workers = 1, run_round_bound = 0;
  std::uint64_t run_seed = 1;
  double run_time_bound = 0.0;
  SearchOptions run_search;
  run->add_option("--domain", run_domain, "domain + profiles JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--agent1", run_agent1, "first seat agent spec")
      ->capture_default_str();
  run->add_option("--agent2", run_agent2, "second seat agent spec")
      ->capture_default_str();
  run->add_option("--repetitions", repetitions,
                  "sessions per seating order (total = 2x)")
      ->capture_default_str();
  run->add_option("--master-seed", run_seed, "tournament master seed")
      ->capture_default_str();
  run->add_option("--workers", workers, "worker threads")->capture_default_str();
  auto* run_rb = run->add_option("--round-bound", run_round_bound,
                                 "max messages per session");
  auto* run_tb = run->add_option("--time-bound", run_time_bound,
                                 "wall-clock seconds per session");
  run->add_option("--rows", rows_path, "write per-session CSV here");
  run->add_option("--summary", summary_path, "write JSON summary here");
  run_search.add_to(*run);

  // ---- session --------------------------------------------------------------
  auto* session = app.add_subcommand("session", "play one session and print it");
  std::string ses_domain, ses_agent1 = "mocana", ses_agent2 = "random-walker";
  std::uint64_t ses_seed = 1;
  int ses_round_bound = 0;
  double ses_time_bound = 0.0;
  SearchOptions ses_search;
  session->add_option("--domain", ses_domain, "domain + profiles JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  session->add_option("--agent1", ses_agent1, "first seat agent spec")
      ->capture_default_str();
  session->add_option("--agent2", ses_agent2, "second seat agent spec")
      ->capture_default_str();
  session->add_option("--seed", ses_seed, "session seed")->capture_default_str();
  auto* ses_rb = session->add_option("--round-bound", ses_round_bound,
                                     "max messages");
  auto* ses_tb = session->add_option("--time-bound", ses_time_bound,
                                     "wall-clock seconds");
  ses_search.add_to(*session);

  // ---- gen-domain -----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-domain",
                                 "generate a random domain with two profiles");
  int gen_issues = 5;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--issues", gen_issues, "number of issues")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output file (default: stdout)");

  // ---- kernel-bench -----------------------------------------------------------
  auto* bench = app.add_subcommand(
      "kernel-bench", "walk-forward kernel comparison on offer series");
  std::string bench_series;
  int bench_count = 50, bench_length = 10, bench_dims = 1;
  std::uint64_t bench_seed = 7;
  bench->add_option("--series", bench_series, "series JSON file")
      ->check(CLI::ExistingFile);
  bench->add_option("--count", bench_count, "synthetic series count")
      ->capture_default_str();
  bench->add_option("--length", bench_length, "synthetic series length")
      ->capture_default_str();
  bench->add_option("--dims", bench_dims, "synthetic offer dimensions")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "synthetic generator seed")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_domain, run_agent1, run_agent2, repetitions, run_seed,
                     workers, run_round_bound, run_rb->count() > 0,
                     run_time_bound, run_tb->count() > 0, run_search, rows_path,
                     summary_path);
    if (session->parsed())
      return cmd_session(ses_domain, ses_agent1, ses_agent2, ses_seed,
                         ses_round_bound, ses_rb->count() > 0, ses_time_bound,
                         ses_tb->count() > 0, ses_search);
    if (gen->parsed()) return cmd_gen_domain(gen_issues, gen_seed, gen_out);
    if (bench->parsed())
      return cmd_kernel_bench(bench_series, bench_count, bench_length,
                              bench_dims, bench_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
