#pragma once

// The bidding strategy: Monte-Carlo tree search over candidate proposals.
//
// Plain UCT cannot cope with the bid space (continuous or combinatorially
// huge), so children are admitted by progressive widening: a node with n_p
// visits and n_c children may expand a new child only while n_p^alpha >= n_c.
// Selection maximizes
//
//     W_i = s_i / (n_i + 1) + C * n^alpha * sqrt(ln(n) / (n_i + 1))
//
// where n is the total number of simulations so far and s_i the cumulative
// score of the player to move at the parent. The game is not zero-sum, so
// every node carries one cumulative score per player (the searching agent
// and its opponent) instead of a negamax scalar.
//
// Rollouts are model-driven: the opponent plays sampled predictions from the
// strategy model and accepts per the modeled acceptance rule; the searcher
// plays uniform bids filtered by the pruning policy and accepts myopically.
// The final proposal is the root child maximizing the average of its own
// utility and its normalized score.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mocana/core.hpp"
#include "mocana/opponent_model.hpp"
#include "mocana/rng.hpp"

namespace mocana::mcts {

struct Pruning {
  enum class Kind { None, Fixed, Variable };

  Kind kind = Kind::None;
  double threshold = 0.0;  // Fixed only

  static Pruning none() { return {}; }
  static Pruning fixed(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0))
      throw std::invalid_argument("fixed pruning threshold must be in [0,1]");
    return {Kind::Fixed, theta};
  }
  static Pruning variable() { return {Kind::Variable, 0.0}; }
};

// Running bound used by variable pruning: the searching agent's own utility
// of the best offer the opponent has made so far. Never decreases within a
// session.
struct PruningState {
  double best_opponent_offer_utility = 0.0;

  void observe_opponent_offer(double own_utility) {
    if (own_utility > best_opponent_offer_utility)
      best_opponent_offer_utility = own_utility;
  }
};

struct MctsConfig {
  double alpha = 0.489;          // progressive-widening exponent
  double exploration = 1.0;      // C in the selection rule
  int simulation_budget = 500;
  int max_rollout_depth = 40;    // plies before a rollout is cut off
  int root_candidate_cap = 200;  // hard cap on root children
  Pruning pruning{};
  int expansion_retries = 100;   // uniform draws before an expansion gives up

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("alpha must be in (0,1]");
    if (!(exploration >= 0.0))
      throw std::invalid_argument("exploration constant must be >= 0");
    if (simulation_budget < 1)
      throw std::invalid_argument("simulation_budget must be >= 1");
    if (max_rollout_depth < 0)
      throw std::invalid_argument("max_rollout_depth must be >= 0");
    if (root_candidate_cap < 1)
      throw std::invalid_argument("root_candidate_cap must be >= 1");
    if (expansion_retries < 1)
      throw std::invalid_argument("expansion_retries must be >= 1");
  }
};

// Scores are indexed by player: 0 = the searching agent, 1 = the opponent.
struct TreeNode {
  Bid bid;         // the proposal leading to this node; empty at the root
  int mover = -1;  // who played `bid`: 0 self, 1 opponent, -1 root
  int visits = 0;
  std::array<double, 2> score{0.0, 0.0};
  std::vector<std::unique_ptr<TreeNode>> children;
};

inline bool should_expand(int parent_visits, int child_count, double alpha) {
  return std::pow(static_cast<double>(parent_visits), alpha) >=
         static_cast<double>(child_count);
}

inline bool prune_check(const Bid& bid, const Pruning& pruning,
                        const UtilityFunction& own_ufun,
                        const PruningState& state) {
  switch (pruning.kind) {
    case Pruning::Kind::None: return true;
    case Pruning::Kind::Fixed: return utility(own_ufun, bid) >= pruning.threshold;
    case Pruning::Kind::Variable:
      return utility(own_ufun, bid) >= state.best_opponent_offer_utility;
  }
  return true;
}

// Child maximizing W_i; `exploit_index` picks whose cumulative score is the
// exploitation term (the player to move at `node`). Ties go to the lowest
// child index.
inline TreeNode* select_child(TreeNode& node, int total_simulations, double C,
                              double alpha, int exploit_index) {
  if (node.children.empty())
    throw std::logic_error("select_child: node has no children");
  const double n = static_cast<double>(std::max(total_simulations, 1));
  const double explore_scale = C * std::pow(n, alpha);
  const double log_n = std::log(n);
  TreeNode* best = nullptr;
  double best_w = 0.0;
  for (const auto& child : node.children) {
    const double denom = static_cast<double>(child->visits) + 1.0;
    const double w = child->score[static_cast<std::size_t>(exploit_index)] / denom +
                     explore_scale * std::sqrt(log_n / denom);
    if (!best || w > best_w) {
      best = child.get();
      best_w = w;
    }
  }
  return best;
}

inline void backpropagate(const std::vector<TreeNode*>& path, double u_self,
                          double u_opp) {
  for (TreeNode* node : path) {
    node->visits += 1;
    node->score[0] += u_self;
    node->score[1] += u_opp;
  }
}

// Everything a search needs to simulate: the game, the searcher's profile,
// and the opponent models (immutable for the duration of the search).
struct SearchContext {
  const NegotiationDomain& domain;
  const UtilityFunction& own_ufun;
  const OpponentUtilityModel& utility_model;
  const OpponentStrategyModel& strategy_model;
  const PruningState& pruning_state;
  double own_reservation = 0.0;  // rollout payoff when a playout is cut off
};

// Rollout entry point: the standing proposal (if any), whose turn it is, and
// the GP round index the opponent's next offer would have.
struct RolloutState {
  std::optional<Bid> pending;
  int to_move = 0;  // 0 = searching agent, 1 = opponent
  int next_opponent_round = 1;
};

// Plays out alternating moves until an acceptance or the depth cap and
// returns (own utility, estimated opponent utility) of the outcome. The
// opponent's payoff of a no-deal is modeled as 0 — its true reservation is
// unobservable.
inline std::array<double, 2> simulate(RolloutState state, const SearchContext& ctx,
                                      const MctsConfig& config, Rng& rng) {
  for (int depth = 0; depth < config.max_rollout_depth; ++depth) {
    if (state.to_move == 1) {
      if (state.pending &&
          opponent_accepts(ctx.utility_model, ctx.strategy_model, *state.pending,
                           state.next_opponent_round, rng)) {
        return {utility(ctx.own_ufun, *state.pending),
                ctx.utility_model.estimated_utility(*state.pending)};
      }
      state.pending =
          ctx.strategy_model.predict_bid(state.next_opponent_round, rng);
      state.next_opponent_round += 1;
    } else {
      std::optional<Bid> candidate;
      for (int t = 0; t < config.expansion_retries; ++t) {
        Bid b = uniform_bid(ctx.domain, rng);
        if (prune_check(b, config.pruning, ctx.own_ufun, ctx.pruning_state)) {
          candidate = std::move(b);
          break;
        }
      }
      // Nothing acceptable to counter with: treat as a dead end. Note the
      // myopic accept below already respects the pruning policy, because the
      // sampled counter-bid passed prune_check.
      if (!candidate) return {ctx.own_reservation, 0.0};
      if (state.pending && utility(ctx.own_ufun, *state.pending) >=
                               utility(ctx.own_ufun, *candidate)) {
        return {utility(ctx.own_ufun, *state.pending),
                ctx.utility_model.estimated_utility(*state.pending)};
      }
      state.pending = std::move(candidate);
    }
    state.to_move = 1 - state.to_move;
  }
  return {ctx.own_reservation, 0.0};
}

namespace detail {

// Appends one uniformly sampled child (pruned only for the searcher's own
// moves); nullptr when the retry budget never produced an admissible bid.
inline TreeNode* try_expand(TreeNode& node, int to_move, const SearchContext& ctx,
                            const MctsConfig& config, Rng& rng) {
  for (int t = 0; t < config.expansion_retries; ++t) {
    Bid b = uniform_bid(ctx.domain, rng);
    if (to_move == 0 &&
        !prune_check(b, config.pruning, ctx.own_ufun, ctx.pruning_state))
      continue;
    auto child = std::make_unique<TreeNode>();
    child->bid = std::move(b);
    child->mover = to_move;
    node.children.push_back(std::move(child));
    return node.children.back().get();
  }
  return nullptr;
}

}  // namespace detail

// Builds a fresh tree with `simulation_budget` iterations of
// select / expand / simulate / backpropagate. Exposed separately from
// mcts_search so tests and tools can inspect the statistics.
inline std::unique_ptr<TreeNode> build_search_tree(const History& history,
                                                   const SearchContext& ctx,
                                                   const MctsConfig& config,
                                                   Rng& rng) {
  config.validate();
  auto root = std::make_unique<TreeNode>();
  const Bid* standing = history.last_proposal();

  std::vector<TreeNode*> path;
  for (int iter = 0; iter < config.simulation_budget; ++iter) {
    path.clear();
    TreeNode* node = root.get();
    path.push_back(node);
    int to_move = 0;
    RolloutState state;
    if (standing) state.pending = *standing;
    state.next_opponent_round = ctx.strategy_model.observed() + 1;

    for (;;) {
      const bool widening_allows =
          should_expand(node->visits, static_cast<int>(node->children.size()),
                        config.alpha) &&
          !(node == root.get() && static_cast<int>(node->children.size()) >=
                                      config.root_candidate_cap);
      if (widening_allows) {
        if (TreeNode* child = detail::try_expand(*node, to_move, ctx, config, rng)) {
          path.push_back(child);
          state.pending = child->bid;
          if (to_move == 1) state.next_opponent_round += 1;
          state.to_move = 1 - to_move;
          const auto payoff = simulate(state, ctx, config, rng);
          backpropagate(path, payoff[0], payoff[1]);
          break;
        }
        // Expansion starved by pruning: fall back to the existing children.
      }
      if (node->children.empty()) {
        // Nowhere to descend; evaluate this node's state directly so the
        // iteration still counts.
        state.to_move = to_move;
        const auto payoff = simulate(state, ctx, config, rng);
        backpropagate(path, payoff[0], payoff[1]);
        break;
      }
      TreeNode* child = select_child(*node, std::max(root->visits, 1),
                                     config.exploration, config.alpha, to_move);
      path.push_back(child);
      state.pending = child->bid;
      if (to_move == 1) state.next_opponent_round += 1;
      to_move = 1 - to_move;
      node = child;
    }
  }
  return root;
}

// Final decision: the root child maximizing (utility(b) + score(b)) / 2 with
// score(b) = s_b / (n_b + 1). Averaging with the raw utility counters the
// pessimistic bias of the normalized score. Ties go to the lowest index.
inline const Bid& choose_bid(const TreeNode& root, const UtilityFunction& own_ufun) {
  if (root.children.empty())
    throw std::logic_error("choose_bid: root has no children");
  const TreeNode* best = nullptr;
  double best_value = 0.0;
  for (const auto& child : root.children) {
    const double score =
        child->score[0] / (static_cast<double>(child->visits) + 1.0);
    const double value = (utility(own_ufun, child->bid) + score) / 2.0;
    if (!best || value > best_value) {
      best = child.get();
      best_value = value;
    }
  }
  return best->bid;
}

// One full search. Returns nothing when the root ended up childless (every
// expansion starved against the pruning policy), which callers treat as a
// search failure with their own fallback.
inline std::optional<Bid> mcts_search(const History& history,
                                      const SearchContext& ctx,
                                      const MctsConfig& config, Rng& rng) {
  const auto root = build_search_tree(history, ctx, config, rng);
  if (root->children.empty()) return std::nullopt;
  return choose_bid(*root, ctx.own_ufun);
}

}  // namespace mocana::mcts
