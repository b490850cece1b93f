// Minimal end-to-end walkthrough: generate a random 3-issue domain, pit the
// search agent against a conceder, and print the whole exchange.

#include <mocana/mocana.hpp>

#include <cstdio>

using namespace mocana;

int main() {
  const DomainFile file = generate_domain(3, 42);
  const std::array<UtilityFunction, 2> profiles{file.profiles[0],
                                                file.profiles[1]};

  std::printf("domain:\n");
  for (const Issue& issue : file.domain.issues)
    std::printf("  %s\n", issue.name.c_str());

  MocanaConfig config;
  config.mcts.simulation_budget = 300;
  config.mcts.pruning = mcts::Pruning::variable();

  MocanaAgent negotiator(file.domain, profiles[0], config);
  ConcederAgent opponent(file.domain, profiles[1], 0.05);

  SessionConfig session;
  session.round_bound = 60;

  const SessionOutcome outcome =
      run_session(negotiator, opponent, file.domain, profiles, session, 7);

  std::printf("\ntranscript:\n");
  for (std::size_t i = 0; i < outcome.history.size(); ++i)
    std::printf("%3zu  player %d  %s\n", i + 1, message_player(i),
                format_message(outcome.history.messages[i]).c_str());

  std::printf("\noutcome: %s after %d messages\n", outcome_name(outcome.kind),
              outcome.rounds_used);
  std::printf("utilities: %.4f vs %.4f\n", outcome.utilities[0],
              outcome.utilities[1]);
  return outcome.kind == OutcomeKind::ProtocolViolation ? 1 : 0;
}
