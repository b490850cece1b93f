#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mocana/core.hpp"

namespace mocana {

enum class ActionKind { Propose, Accept, Reject };

struct AgentAction {
  ActionKind kind = ActionKind::Reject;
  std::optional<Bid> bid;  // present iff kind == Propose

  static AgentAction propose(Bid b) { return {ActionKind::Propose, std::move(b)}; }
  static AgentAction accept() { return {ActionKind::Accept, std::nullopt}; }
  static AgentAction reject() { return {ActionKind::Reject, std::nullopt}; }
};

// What the engine tells an agent about the session limits before each move.
struct DeadlineInfo {
  std::optional<int> round_bound;        // total message budget, if bounded
  std::optional<double> seconds_left;    // time budget remaining, if bounded
  int rounds_used = 0;                   // messages exchanged so far
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;

  // Called once before a session; the seed keys all of the agent's
  // randomness for that session.
  virtual void reset(std::uint64_t /*seed*/) {}

  // Produce the next move. `history` is the full public transcript; the
  // agent to move can rely on turn alternation to identify its own seat.
  virtual AgentAction act(const History& history, const DeadlineInfo& deadline) = 0;
};

}  // namespace mocana
