#pragma once

// Concrete agents. MoCaNA is the subject of the library; the others are
// opponents and test fixtures.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mocana/agent.hpp"
#include "mocana/core.hpp"
#include "mocana/gp.hpp"
#include "mocana/mcts.hpp"
#include "mocana/opponent_model.hpp"
#include "mocana/rng.hpp"

namespace mocana {

// Replays a fixed tape of actions, then rejects when the tape runs out.
// Deterministic by construction; reset() rewinds the tape.
class ScriptedAgent : public Agent {
 public:
  explicit ScriptedAgent(std::vector<AgentAction> tape) : tape_(std::move(tape)) {}

  std::string name() const override { return "scripted"; }
  void reset(std::uint64_t /*seed*/) override { cursor_ = 0; }

  AgentAction act(const History& /*history*/, const DeadlineInfo&) override {
    if (cursor_ >= tape_.size()) return AgentAction::reject();
    return tape_[cursor_++];
  }

 private:
  std::vector<AgentAction> tape_;
  std::size_t cursor_ = 0;
};

// Bids uniformly at random; accepts a standing offer iff it is worth at
// least as much as the random counter-bid it just drew. The accept rule
// keeps unbounded sessions from running forever.
class RandomWalkerAgent : public Agent {
 public:
  RandomWalkerAgent(NegotiationDomain domain, UtilityFunction ufun)
      : domain_(std::move(domain)), ufun_(std::move(ufun)) {}

  std::string name() const override { return "random-walker"; }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }

  AgentAction act(const History& history, const DeadlineInfo&) override {
    Bid draw = uniform_bid(domain_, rng_);
    const Bid* standing = history.last_proposal();
    if (standing && utility(ufun_, *standing) >= utility(ufun_, draw))
      return AgentAction::accept();
    return AgentAction::propose(std::move(draw));
  }

 private:
  NegotiationDomain domain_;
  UtilityFunction ufun_;
  Rng rng_;
};

// Time-dependent baseline: aims at a target utility that decays linearly
// with the number of exchanged rounds, proposing the cheapest sampled bid
// that still meets the target and accepting any offer that does.
class ConcederAgent : public Agent {
 public:
  ConcederAgent(NegotiationDomain domain, UtilityFunction ufun, double rate)
      : domain_(std::move(domain)), ufun_(std::move(ufun)), rate_(rate) {}

  std::string name() const override { return "conceder"; }
  void reset(std::uint64_t seed) override { rng_.seed(seed); }

  AgentAction act(const History& history, const DeadlineInfo&) override {
    const double target =
        std::max(0.0, 1.0 - rate_ * static_cast<double>(history.size() / 2));
    const Bid* standing = history.last_proposal();
    if (standing && utility(ufun_, *standing) >= target)
      return AgentAction::accept();

    // Of 64 samples, prefer the lowest utility still at/above target (give
    // away as little as possible); otherwise the best we found.
    std::optional<Bid> best_above, best_any;
    double best_above_u = std::numeric_limits<double>::infinity();
    double best_any_u = -1.0;
    for (int t = 0; t < 64; ++t) {
      Bid b = uniform_bid(domain_, rng_);
      const double u = utility(ufun_, b);
      if (u >= target && u < best_above_u) {
        best_above_u = u;
        best_above = b;
      }
      if (u > best_any_u) {
        best_any_u = u;
        best_any = std::move(b);
      }
    }
    return AgentAction::propose(best_above ? std::move(*best_above)
                                           : std::move(*best_any));
  }

 private:
  NegotiationDomain domain_;
  UtilityFunction ufun_;
  double rate_;
  Rng rng_;
};

struct MocanaConfig {
  mcts::MctsConfig mcts{};
  int hypothesis_count = 128;
  double concession_rate = 0.002;
  double likelihood_sigma = 0.25;
  gp::KernelFamily kernel = gp::KernelFamily::RationalQuadratic;
};

// The MCTS negotiator. Each turn it (1) folds any new opponent proposals
// into the two opponent models and the pruning state, (2) searches for a
// candidate bid, and (3) accepts the standing offer iff it beats the
// candidate — never when fixed pruning marks the offer as below threshold.
// Deadline information is deliberately ignored: the agent does not reason
// about time pressure, which is a property of the strategy itself.
class MocanaAgent : public Agent {
 public:
  MocanaAgent(NegotiationDomain domain, UtilityFunction ufun, MocanaConfig config = {})
      : domain_(std::move(domain)), ufun_(std::move(ufun)), config_(config) {
    config_.mcts.validate();
    reset(0);
  }

  std::string name() const override { return "mocana"; }

  void reset(std::uint64_t seed) override {
    rng_.seed(seed);
    utility_model_ =
        OpponentUtilityModel::generate(domain_, config_.hypothesis_count, rng_,
                                       config_.concession_rate,
                                       config_.likelihood_sigma);
    strategy_model_ = OpponentStrategyModel(domain_, config_.kernel);
    pruning_state_ = mcts::PruningState{};
    best_opponent_bid_.reset();
    processed_ = 0;
    search_fallbacks_ = 0;
  }

  AgentAction act(const History& history, const DeadlineInfo&) override {
    const int seat = turn_player(history);
    for (std::size_t i = processed_; i < history.size(); ++i) {
      const Message& msg = history.messages[i];
      if (message_player(i) == seat || msg.performative != Performative::Propose)
        continue;
      const int round = strategy_model_.observed() + 1;
      utility_model_.update(*msg.bid, round);
      strategy_model_.observe(*msg.bid);
      const double offer_utility = utility(ufun_, *msg.bid);
      if (offer_utility > pruning_state_.best_opponent_offer_utility)
        best_opponent_bid_ = *msg.bid;
      pruning_state_.observe_opponent_offer(offer_utility);
    }
    processed_ = history.size();

    const mcts::SearchContext ctx{domain_,         ufun_,
                                  utility_model_,  strategy_model_,
                                  pruning_state_,  ufun_.no_agreement_utility};
    std::optional<Bid> candidate = mcts::mcts_search(history, ctx, config_.mcts, rng_);
    if (!candidate) {
      ++search_fallbacks_;
      candidate = fallback_bid();
    }

    if (const Bid* standing = history.last_proposal()) {
      const double offered = utility(ufun_, *standing);
      const bool above_floor =
          config_.mcts.pruning.kind != mcts::Pruning::Kind::Fixed ||
          offered >= config_.mcts.pruning.threshold;
      if (above_floor && offered >= utility(ufun_, *candidate))
        return AgentAction::accept();
    }
    return AgentAction::propose(std::move(*candidate));
  }

  int search_fallbacks() const { return search_fallbacks_; }
  const OpponentUtilityModel& utility_model() const { return utility_model_; }
  const OpponentStrategyModel& strategy_model() const { return strategy_model_; }
  const mcts::PruningState& pruning_state() const { return pruning_state_; }

 private:
  // Emergency proposal when the search produced no candidate (pruning
  // starved every expansion). Under variable pruning, echoing the
  // opponent's best offer is always admissible — its utility equals the
  // bound itself.
  Bid fallback_bid() {
    std::optional<Bid> best;
    double best_u = -1.0;
    for (int t = 0; t < 10000; ++t) {
      Bid b = uniform_bid(domain_, rng_);
      if (mcts::prune_check(b, config_.mcts.pruning, ufun_, pruning_state_))
        return b;
      const double u = utility(ufun_, b);
      if (u > best_u) {
        best_u = u;
        best = std::move(b);
      }
    }
    if (config_.mcts.pruning.kind == mcts::Pruning::Kind::Variable &&
        best_opponent_bid_)
      return *best_opponent_bid_;
    return std::move(*best);
  }

  NegotiationDomain domain_;
  UtilityFunction ufun_;
  MocanaConfig config_;
  Rng rng_;
  OpponentUtilityModel utility_model_;
  OpponentStrategyModel strategy_model_{NegotiationDomain{}};
  mcts::PruningState pruning_state_;
  std::optional<Bid> best_opponent_bid_;
  std::size_t processed_ = 0;
  int search_fallbacks_ = 0;
};

}  // namespace mocana
