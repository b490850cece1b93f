#pragma once

// Session engine for the alternating-offers protocol. Player 1 moves first;
// a session ends on Accept, Reject, or when a round/time bound is hit.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>

#include "mocana/agent.hpp"
#include "mocana/core.hpp"

namespace mocana {

struct SessionConfig {
  std::optional<int> round_bound;           // max messages, inclusive
  std::optional<double> time_bound_seconds; // wall-clock budget
  // When set, overrides the profiles' reject/no-agreement payoffs for the
  // given seat (index 0 = player 1).
  std::array<std::optional<double>, 2> reservation_utility{};
  // Safety stop when neither bound is configured, so a session cannot run
  // forever. Counts as a bound ending.
  int unbounded_cap = 1000;
};

enum class OutcomeKind { Agreement, Reject, BoundReached, ProtocolViolation };

struct SessionOutcome {
  OutcomeKind kind = OutcomeKind::BoundReached;
  std::optional<Bid> agreement;       // present iff kind == Agreement
  History history;
  std::array<double, 2> utilities{0.0, 0.0};
  int rounds_used = 0;                // messages exchanged
  std::optional<int> violator;        // offending player on violation (1 or 2)
};

// True when no further message may be played: the history already ended, the
// round bound is used up, or (when given) the elapsed time exceeds the time
// bound. Pure in its inputs; the engine supplies `elapsed_seconds`.
inline bool is_terminal(const History& history, const SessionConfig& config,
                        std::optional<double> elapsed_seconds = std::nullopt) {
  if (history.ends_negotiation()) return true;
  const int bound = config.round_bound
                        ? *config.round_bound
                        : (config.time_bound_seconds ? std::numeric_limits<int>::max()
                                                     : config.unbounded_cap);
  if (static_cast<int>(history.size()) >= bound) return true;
  if (config.time_bound_seconds && elapsed_seconds &&
      *elapsed_seconds >= *config.time_bound_seconds)
    return true;
  return false;
}

namespace detail {

inline double reservation_for(const SessionConfig& config,
                              const UtilityFunction& ufun, int seat,
                              OutcomeKind kind) {
  if (config.reservation_utility[seat]) return *config.reservation_utility[seat];
  return kind == OutcomeKind::Reject ? ufun.reject_utility
                                     : ufun.no_agreement_utility;
}

}  // namespace detail

// Runs one session of `first` (player 1) against `second` (player 2). Both
// agents are reset with seeds derived from `seed`, so the same inputs replay
// the same transcript. An agent returning an illegal action loses the
// session as a protocol violation; both players then fall back to their
// no-agreement payoffs and the violator is recorded.
inline SessionOutcome run_session(Agent& first, Agent& second,
                                  const NegotiationDomain& domain,
                                  const std::array<UtilityFunction, 2>& profiles,
                                  const SessionConfig& config,
                                  std::uint64_t seed) {
  first.reset(derive_seed(seed, 1));
  second.reset(derive_seed(seed, 2));

  SessionOutcome outcome;
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&]() -> std::optional<double> {
    if (!config.time_bound_seconds) return std::nullopt;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  while (!is_terminal(outcome.history, config, elapsed())) {
    const int player = turn_player(outcome.history);
    Agent& mover = player == 1 ? first : second;

    DeadlineInfo deadline;
    deadline.round_bound = config.round_bound;
    deadline.rounds_used = static_cast<int>(outcome.history.size());
    if (config.time_bound_seconds)
      deadline.seconds_left = std::max(0.0, *config.time_bound_seconds - *elapsed());

    const AgentAction action = mover.act(outcome.history, deadline);

    // Legality: a proposal must fit the domain; a response needs a standing
    // proposal (always true after the opening move).
    bool legal = true;
    if (action.kind == ActionKind::Propose) {
      legal = action.bid && validate_bid(domain, *action.bid).empty();
    } else {
      legal = !outcome.history.empty();
    }
    if (!legal) {
      outcome.kind = OutcomeKind::ProtocolViolation;
      outcome.violator = player;
      break;
    }

    switch (action.kind) {
      case ActionKind::Propose:
        outcome.history.append(Message::propose(*action.bid));
        break;
      case ActionKind::Accept:
        outcome.history.append(Message::accept());
        break;
      case ActionKind::Reject:
        outcome.history.append(Message::reject());
        break;
    }
  }

  outcome.rounds_used = static_cast<int>(outcome.history.size());

  if (outcome.kind != OutcomeKind::ProtocolViolation) {
    if (!outcome.history.empty() &&
        outcome.history.messages.back().performative == Performative::Accept) {
      outcome.kind = OutcomeKind::Agreement;
      outcome.agreement = *outcome.history.last_proposal();
    } else if (!outcome.history.empty() &&
               outcome.history.messages.back().performative ==
                   Performative::Reject) {
      outcome.kind = OutcomeKind::Reject;
    } else {
      outcome.kind = OutcomeKind::BoundReached;
    }
  }

  for (int seat = 0; seat < 2; ++seat) {
    if (outcome.kind == OutcomeKind::Agreement)
      outcome.utilities[seat] = utility(profiles[seat], *outcome.agreement);
    else
      outcome.utilities[seat] =
          detail::reservation_for(config, profiles[seat], seat, outcome.kind);
  }
  return outcome;
}

}  // namespace mocana
