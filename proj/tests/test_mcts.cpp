#include <catch2/catch_amalgamated.hpp>

#include <mocana/mocana.hpp>

#include <cmath>
#include <functional>

#include "test_helpers.hpp"

using namespace mocana;

namespace {

// Owns everything a SearchContext references, so tests can hand out contexts
// without lifetime headaches.
struct SearchFixture {
  NegotiationDomain domain;
  UtilityFunction ufun;
  OpponentUtilityModel utility_model;
  OpponentStrategyModel strategy_model;
  mcts::PruningState pruning_state;

  SearchFixture(NegotiationDomain d, UtilityFunction u, std::uint64_t seed = 100,
                int hypotheses = 16)
      : domain(std::move(d)),
        ufun(std::move(u)),
        utility_model(make_model(domain, hypotheses, seed)),
        strategy_model(domain) {}

  static OpponentUtilityModel make_model(const NegotiationDomain& domain,
                                         int hypotheses, std::uint64_t seed) {
    Rng rng(seed);
    return OpponentUtilityModel::generate(domain, hypotheses, rng);
  }

  mcts::SearchContext context(double reservation = 0.0) const {
    return mcts::SearchContext{domain,         ufun,          utility_model,
                               strategy_model, pruning_state, reservation};
  }
};

// u(price) = price / 20, topping out at 0.5: no bid can pass a 0.8 bar.
UtilityFunction half_ramp_profile() {
  UtilityFunction u;
  u.weights["price"] = 1.0;
  u.valuations["price"] = LinearValuation{0.0, 10.0, 0.0, 0.5};
  return u;
}

void check_tree_invariants(const mcts::TreeNode& node, const SearchFixture& fix,
                           const mcts::MctsConfig& config, bool is_root) {
  // Progressive widening never over-expands: a child is only added while
  // visits^alpha still covers the child count, so the final count can
  // exceed that bound by at most the one child added last.
  CHECK(static_cast<double>(node.children.size()) <=
        std::pow(static_cast<double>(node.visits), config.alpha) + 1.0 + 1e-9);
  if (is_root)
    CHECK(static_cast<int>(node.children.size()) <= config.root_candidate_cap);

  int child_visits = 0;
  for (const auto& child : node.children) {
    REQUIRE(child != nullptr);
    CHECK((child->mover == 0 || child->mover == 1));
    CHECK(validate_bid(fix.domain, child->bid).empty());
    if (child->mover == 0 && config.pruning.kind == mcts::Pruning::Kind::Fixed)
      CHECK(utility(fix.ufun, child->bid) >= config.pruning.threshold);
    if (child->mover == 0 && config.pruning.kind == mcts::Pruning::Kind::Variable)
      CHECK(utility(fix.ufun, child->bid) >=
            fix.pruning_state.best_opponent_offer_utility);
    child_visits += child->visits;
    check_tree_invariants(*child, fix, config, false);
  }
  // Every child visit came from an iteration that passed through this node.
  CHECK(node.visits >= child_visits);
  for (const double s : node.score) {
    CHECK(s >= 0.0);
    CHECK(s <= static_cast<double>(node.visits) + 1e-9);
  }
}

}  // namespace

TEST_CASE("progressive widening gates expansion by visit count", "[mcts]") {
  CHECK(mcts::should_expand(0, 0, 0.489));   // first visit always expands
  CHECK(mcts::should_expand(1, 1, 0.489));
  CHECK(!mcts::should_expand(1, 2, 0.489));

  // 100^0.489 = 9.506..., so a tenth child needs more visits.
  CHECK(std::pow(100.0, 0.489) == Catch::Approx(9.506047936562814).epsilon(1e-14));
  CHECK(mcts::should_expand(100, 9, 0.489));
  CHECK(!mcts::should_expand(100, 10, 0.489));
}

TEST_CASE("pruning policies admit exactly the right bids", "[mcts]") {
  const auto ufun = helpers::ramp_up_profile();
  mcts::PruningState state;

  CHECK(mcts::prune_check(helpers::price_bid(0), mcts::Pruning::none(), ufun, state));

  const auto fixed = mcts::Pruning::fixed(0.8);
  CHECK(mcts::prune_check(helpers::price_bid(8), fixed, ufun, state));   // 0.8 >= 0.8
  CHECK(mcts::prune_check(helpers::price_bid(10), fixed, ufun, state));
  CHECK(!mcts::prune_check(helpers::price_bid(7), fixed, ufun, state));  // 0.7 < 0.8
  CHECK_THROWS_AS(mcts::Pruning::fixed(1.5), std::invalid_argument);
  CHECK_THROWS_AS(mcts::Pruning::fixed(-0.1), std::invalid_argument);

  const auto variable = mcts::Pruning::variable();
  CHECK(mcts::prune_check(helpers::price_bid(0), variable, ufun, state));
  state.observe_opponent_offer(0.65);
  CHECK(!mcts::prune_check(helpers::price_bid(6), variable, ufun, state));
  CHECK(mcts::prune_check(helpers::price_bid(7), variable, ufun, state));
  state.observe_opponent_offer(0.3);  // the bound never decreases
  CHECK(state.best_opponent_offer_utility == 0.65);
}

TEST_CASE("child selection maximizes the widening-adjusted UCT value", "[mcts]") {
  mcts::TreeNode node;
  auto add_child = [&](double score0, double score1, int visits) {
    auto child = std::make_unique<mcts::TreeNode>();
    child->score = {score0, score1};
    child->visits = visits;
    child->mover = 0;
    node.children.push_back(std::move(child));
  };

  SECTION("the visit bonus can outweigh a lower mean score") {
    add_child(3.0, 0.0, 4);
    add_child(1.0, 0.0, 1);
    // With n = 5, C = 1, alpha = 0.489:
    //   W_first  = 3/5 + 5^0.489 * sqrt(ln 5 / 5) = 1.8463741804588025
    //   W_second = 1/2 + 5^0.489 * sqrt(ln 5 / 2) = 2.4706906135377715
    const double scale = std::pow(5.0, 0.489);
    const double w_first = 3.0 / 5.0 + scale * std::sqrt(std::log(5.0) / 5.0);
    const double w_second = 1.0 / 2.0 + scale * std::sqrt(std::log(5.0) / 2.0);
    CHECK(w_first == Catch::Approx(1.8463741804588025).epsilon(1e-14));
    CHECK(w_second == Catch::Approx(2.4706906135377715).epsilon(1e-14));
    REQUIRE(w_second > w_first);

    CHECK(mcts::select_child(node, 5, 1.0, 0.489, 0) == node.children[1].get());
  }

  SECTION("without exploration the best mean score wins") {
    add_child(2.0, 0.0, 3);  // 0.5 per visit
    add_child(2.5, 0.5, 3);  // 0.625 per visit
    CHECK(mcts::select_child(node, 6, 0.0, 0.489, 0) == node.children[1].get());
  }

  SECTION("the exploitation term belongs to the player to move") {
    add_child(1.0, 0.0, 1);
    add_child(0.0, 1.0, 1);
    CHECK(mcts::select_child(node, 2, 0.0, 0.489, 0) == node.children[0].get());
    CHECK(mcts::select_child(node, 2, 0.0, 0.489, 1) == node.children[1].get());
  }

  SECTION("exact ties resolve to the lowest index") {
    add_child(0.5, 0.5, 1);
    add_child(0.5, 0.5, 1);
    add_child(0.5, 0.5, 1);
    CHECK(mcts::select_child(node, 3, 1.0, 0.489, 0) == node.children[0].get());
  }

  SECTION("a childless node cannot select") {
    CHECK_THROWS_AS(mcts::select_child(node, 1, 1.0, 0.489, 0), std::logic_error);
  }
}

TEST_CASE("backpropagation accumulates both players' payoffs", "[mcts]") {
  mcts::TreeNode a, b, c;
  std::vector<mcts::TreeNode*> path{&a, &b, &c};
  mcts::backpropagate(path, 0.7, 0.4);
  for (const auto* node : path) {
    CHECK(node->visits == 1);
    CHECK(node->score[0] == 0.7);
    CHECK(node->score[1] == 0.4);
  }
  std::vector<mcts::TreeNode*> shorter{&a, &b};
  mcts::backpropagate(shorter, 0.1, 0.9);
  CHECK(a.visits == 2);
  CHECK(a.score[0] == Catch::Approx(0.8));
  CHECK(a.score[1] == Catch::Approx(1.3));
  CHECK(c.visits == 1);
}

TEST_CASE("rollouts resolve known endgames deterministically", "[mcts]") {
  SECTION("a zero-depth rollout pays the reservation") {
    SearchFixture fix(helpers::price_domain(), helpers::ramp_up_profile());
    mcts::MctsConfig config;
    config.max_rollout_depth = 0;
    Rng rng(1);
    const auto payoff =
        mcts::simulate(mcts::RolloutState{}, fix.context(0.33), config, rng);
    CHECK(payoff[0] == 0.33);
    CHECK(payoff[1] == 0.0);
  }

  SECTION("an opponent who loves everything accepts the standing offer") {
    NegotiationDomain domain;
    domain.issues.push_back(Issue{"deal", Categorical{{"x"}}});
    UtilityFunction ufun;
    ufun.weights["deal"] = 1.0;
    ufun.valuations["deal"] = TableValuation{{{"x", 0.7}}};

    // A single-category domain gives every hypothesis utility 1 for the
    // only possible bid, so the unfitted acceptance bar (0.9) always passes.
    SearchFixture fix(domain, ufun);
    mcts::RolloutState state;
    state.pending = Bid{{"deal", std::string("x")}};
    state.to_move = 1;
    Rng rng(2);
    const auto payoff = mcts::simulate(state, fix.context(), mcts::MctsConfig{}, rng);
    CHECK(payoff[0] == Catch::Approx(0.7));
    CHECK(payoff[1] == Catch::Approx(1.0));
  }

  SECTION("the searcher myopically accepts an unbeatable standing offer") {
    SearchFixture fix(helpers::price_domain(), helpers::ramp_up_profile());
    mcts::RolloutState state;
    state.pending = helpers::price_bid(10);  // utility 1.0: no draw beats it
    state.to_move = 0;
    Rng rng(3);
    const auto payoff = mcts::simulate(state, fix.context(), mcts::MctsConfig{}, rng);
    CHECK(payoff[0] == 1.0);
    CHECK(payoff[1] ==
          Catch::Approx(fix.utility_model.estimated_utility(helpers::price_bid(10))));
  }

  SECTION("pruning that forbids every bid ends the rollout at the reservation") {
    SearchFixture fix(helpers::price_domain(), half_ramp_profile());
    mcts::MctsConfig config;
    config.pruning = mcts::Pruning::fixed(0.8);  // max attainable utility is 0.5
    mcts::RolloutState state;
    state.pending = helpers::price_bid(10);
    state.to_move = 0;
    Rng rng(4);
    const auto payoff = mcts::simulate(state, fix.context(0.25), config, rng);
    CHECK(payoff[0] == 0.25);
    CHECK(payoff[1] == 0.0);
  }

  SECTION("payoffs always stay in the unit box") {
    SearchFixture fix(helpers::mixed_domain(), helpers::mixed_profile_a(), 7);
    for (int t = 0; t < 4; ++t) {
      Rng feed(static_cast<std::uint64_t>(t) + 40);
      fix.strategy_model.observe(uniform_bid(fix.domain, feed));
    }
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      mcts::RolloutState state;
      state.to_move = i % 2;
      const auto payoff = mcts::simulate(state, fix.context(), mcts::MctsConfig{}, rng);
      for (const double u : payoff) {
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
      }
    }
  }
}

TEST_CASE("search trees respect budget, widening, and pruning", "[mcts]") {
  SearchFixture fix(helpers::price_domain(), helpers::ramp_up_profile());
  fix.strategy_model.observe(helpers::price_bid(3));
  fix.strategy_model.observe(helpers::price_bid(4));
  fix.strategy_model.observe(helpers::price_bid(5));

  History history;
  history.append(Message::propose(helpers::price_bid(2)));
  history.append(Message::propose(helpers::price_bid(5)));

  for (const int budget : {1, 10, 500}) {
    mcts::MctsConfig config;
    config.simulation_budget = budget;
    Rng rng(42);
    const auto root = mcts::build_search_tree(history, fix.context(), config, rng);
    REQUIRE(root != nullptr);
    CHECK(root->visits == budget);
    CHECK(root->mover == -1);
    check_tree_invariants(*root, fix, config, true);
    if (budget == 1) {
      // One iteration expands exactly one root child and chooses it.
      REQUIRE(root->children.size() == 1);
      CHECK(mcts::choose_bid(*root, fix.ufun) == root->children[0]->bid);
    }
  }

  SECTION("fixed pruning holds inside the whole tree") {
    mcts::MctsConfig config;
    config.simulation_budget = 300;
    config.pruning = mcts::Pruning::fixed(0.8);
    Rng rng(43);
    const auto root = mcts::build_search_tree(history, fix.context(), config, rng);
    CHECK(root->visits == 300);
    check_tree_invariants(*root, fix, config, true);
    CHECK(!root->children.empty());
  }

  SECTION("variable pruning tracks the observed best offer") {
    fix.pruning_state.observe_opponent_offer(0.5);
    mcts::MctsConfig config;
    config.simulation_budget = 300;
    config.pruning = mcts::Pruning::variable();
    Rng rng(44);
    const auto root = mcts::build_search_tree(history, fix.context(), config, rng);
    CHECK(root->visits == 300);
    check_tree_invariants(*root, fix, config, true);
  }
}

TEST_CASE("the search is deterministic for a fixed seed", "[mcts]") {
  SearchFixture fix(helpers::mixed_domain(), helpers::mixed_profile_a(), 11);
  Rng feed(60);
  for (int t = 0; t < 3; ++t) fix.strategy_model.observe(uniform_bid(fix.domain, feed));

  History history;
  history.append(Message::propose(uniform_bid(fix.domain, feed)));

  mcts::MctsConfig config;
  config.simulation_budget = 200;
  Rng r1(7), r2(7), r3(8);
  const auto a = mcts::mcts_search(history, fix.context(), config, r1);
  const auto b = mcts::mcts_search(history, fix.context(), config, r2);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(*a == *b);

  // A different seed is allowed to differ (and here does).
  const auto c = mcts::mcts_search(history, fix.context(), config, r3);
  REQUIRE(c.has_value());
}

TEST_CASE("the final decision blends utility with the normalized score",
          "[mcts]") {
  NegotiationDomain domain;
  domain.issues.push_back(Issue{"x", ContinuousRange{0.0, 1.0}});
  UtilityFunction ufun;
  ufun.weights["x"] = 1.0;
  ufun.valuations["x"] = LinearValuation{0.0, 1.0, 0.0, 1.0};

  mcts::TreeNode root;
  auto add = [&](double x, double score0, int visits) {
    auto child = std::make_unique<mcts::TreeNode>();
    child->bid = Bid{{"x", x}};
    child->score = {score0, 0.0};
    child->visits = visits;
    child->mover = 0;
    root.children.push_back(std::move(child));
  };
  // (0.9 + 0.2/2)/2 = 0.5 against (0.5 + 1.8/3)/2 = 0.55: the second bid
  // wins on search evidence despite its lower raw utility.
  add(0.9, 0.2, 1);
  add(0.5, 1.8, 2);
  CHECK(mcts::choose_bid(root, ufun) == root.children[1]->bid);

  mcts::TreeNode empty;
  CHECK_THROWS_AS(mcts::choose_bid(empty, ufun), std::logic_error);
}

TEST_CASE("an unsatisfiable pruning bound makes the search abstain", "[mcts]") {
  SearchFixture fix(helpers::price_domain(), half_ramp_profile());
  mcts::MctsConfig config;
  config.simulation_budget = 50;
  config.pruning = mcts::Pruning::fixed(0.8);
  Rng rng(9);
  const auto root =
      mcts::build_search_tree(History{}, fix.context(), config, rng);
  CHECK(root->children.empty());
  CHECK(root->visits == 50);  // starved iterations still count and learn

  Rng rng2(9);
  CHECK(!mcts::mcts_search(History{}, fix.context(), config, rng2).has_value());
}

TEST_CASE("configuration bounds are enforced", "[mcts]") {
  SearchFixture fix(helpers::price_domain(), helpers::ramp_up_profile());
  mcts::MctsConfig config;
  config.simulation_budget = 0;
  Rng rng(1);
  CHECK_THROWS_AS(mcts::mcts_search(History{}, fix.context(), config, rng),
                  std::invalid_argument);
  config.simulation_budget = 10;
  config.alpha = 1.5;
  CHECK_THROWS_AS(mcts::mcts_search(History{}, fix.context(), config, rng),
                  std::invalid_argument);
}
