#include <catch2/catch_amalgamated.hpp>

#include <mocana/mocana.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace mocana;

TEST_CASE("triangular valuation shapes hit their anchor points", "[opponent]") {
  const auto inc = TriangularFn::increasing(0.0, 10.0);
  CHECK(inc.eval(0.0) == 0.0);
  CHECK(inc.eval(10.0) == 1.0);
  CHECK(inc.eval(5.0) == Catch::Approx(0.5));
  CHECK(inc.eval(-4.0) == 0.0);   // clamped below
  CHECK(inc.eval(25.0) == 1.0);   // clamped above

  const auto dec = TriangularFn::decreasing(0.0, 10.0);
  CHECK(dec.eval(0.0) == 1.0);
  CHECK(dec.eval(10.0) == 0.0);
  CHECK(dec.eval(2.5) == Catch::Approx(0.75));

  const auto peak = TriangularFn::peaked(0.0, 5.0, 10.0);
  CHECK(peak.eval(5.0) == 1.0);
  CHECK(peak.eval(0.0) == 0.0);
  CHECK(peak.eval(10.0) == 0.0);
  CHECK(peak.eval(2.5) == Catch::Approx(0.5));
  CHECK(TriangularFn::peaked(0.0, 4.0, 10.0).eval(2.0) == Catch::Approx(0.5));
  CHECK(triangular_eval(peak, 7.5) == Catch::Approx(0.5));

  CHECK_THROWS_AS(TriangularFn::increasing(5.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(TriangularFn::peaked(0.0, 0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(TriangularFn::peaked(0.0, 10.0, 10.0), std::invalid_argument);
}

TEST_CASE("rank weights are normalized and ordered", "[opponent]") {
  CHECK(rank_to_weight(1, 1) == Catch::Approx(1.0));
  CHECK(rank_to_weight(1, 3) == Catch::Approx(0.5));
  CHECK(rank_to_weight(2, 3) == Catch::Approx(1.0 / 3.0));
  CHECK(rank_to_weight(3, 3) == Catch::Approx(1.0 / 6.0));
  CHECK(rank_to_weight(1, 4) == Catch::Approx(0.4));
  CHECK(rank_to_weight(2, 4) == Catch::Approx(0.3));
  CHECK(rank_to_weight(3, 4) == Catch::Approx(0.2));
  CHECK(rank_to_weight(4, 4) == Catch::Approx(0.1));

  for (int m = 1; m <= 50; ++m) {
    double sum = 0.0;
    for (int r = 1; r <= m; ++r) {
      sum += rank_to_weight(r, m);
      if (r > 1) CHECK(rank_to_weight(r, m) < rank_to_weight(r - 1, m));
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(rank_to_weight(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(rank_to_weight(4, 3), std::invalid_argument);
}

TEST_CASE("hypothesis utilities combine weights and per-issue shapes",
          "[opponent]") {
  Hypothesis hyp;
  hyp.ranking = {1, 2};
  hyp.weights = {0.7, 0.3};
  hyp.valuations.push_back(TriangularFn::increasing(0.0, 10.0));
  hyp.valuations.push_back(CategoryLevels{{0.2, 1.0}});
  hyp.probability = 1.0;

  CHECK(hyp.utility_of({5.0, 1.0}) == Catch::Approx(0.7 * 0.5 + 0.3 * 1.0));
  // Category coordinates round to the nearest index and clamp to the ends.
  CHECK(hyp.utility_of({5.0, 0.4}) == Catch::Approx(0.7 * 0.5 + 0.3 * 0.2));
  CHECK(hyp.utility_of({5.0, 7.0}) == Catch::Approx(0.7 * 0.5 + 0.3 * 1.0));
  CHECK(hyp.utility_of({5.0, -3.0}) == Catch::Approx(0.7 * 0.5 + 0.3 * 0.2));
}

TEST_CASE("generated hypothesis sets form a uniform, well-formed prior",
          "[opponent]") {
  const auto domain = helpers::mixed_domain();
  Rng rng(21);
  const auto model = OpponentUtilityModel::generate(domain, 100, rng);
  const auto& hyps = model.hypotheses();
  REQUIRE(hyps.size() == 100);

  const int m = static_cast<int>(domain.issues.size());
  for (const auto& hyp : hyps) {
    CHECK(hyp.probability == Catch::Approx(0.01));

    // The ranking is a permutation of 1..m and the weights follow it.
    auto sorted = hyp.ranking;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < m; ++i) {
      CHECK(sorted[static_cast<std::size_t>(i)] == i + 1);
      CHECK(hyp.weights[static_cast<std::size_t>(i)] ==
            Catch::Approx(rank_to_weight(hyp.ranking[static_cast<std::size_t>(i)], m)));
    }

    // Categorical issues carry a permutation of the evenly spaced levels.
    const auto& levels = std::get<CategoryLevels>(hyp.valuations[2]).levels;
    auto level_sorted = levels;
    std::sort(level_sorted.begin(), level_sorted.end());
    REQUIRE(level_sorted.size() == 3);
    CHECK(level_sorted[0] == Catch::Approx(0.0));
    CHECK(level_sorted[1] == Catch::Approx(0.5));
    CHECK(level_sorted[2] == Catch::Approx(1.0));

    CHECK(std::holds_alternative<TriangularFn>(hyp.valuations[0]));
    CHECK(std::holds_alternative<TriangularFn>(hyp.valuations[1]));
  }

  // Same seed, same prior; and estimated utilities stay inside [0, 1].
  Rng rng_a(33), rng_b(33);
  const auto a = OpponentUtilityModel::generate(domain, 16, rng_a);
  const auto b = OpponentUtilityModel::generate(domain, 16, rng_b);
  Rng bids(5);
  for (int i = 0; i < 50; ++i) {
    const Bid bid = uniform_bid(domain, bids);
    const double ua = a.estimated_utility(bid);
    CHECK(ua == b.estimated_utility(bid));
    CHECK(ua >= 0.0);
    CHECK(ua <= 1.0);
  }

  CHECK_THROWS_AS(OpponentUtilityModel::generate(domain, 0, rng),
                  std::invalid_argument);
}

TEST_CASE("the expected concession line decays to zero", "[opponent]") {
  const auto domain = helpers::price_domain();
  Rng rng(3);
  const auto model = OpponentUtilityModel::generate(domain, 4, rng, 0.002);
  CHECK(model.expected_utility_at(0) == Catch::Approx(1.0));
  CHECK(model.expected_utility_at(100) == Catch::Approx(0.8));
  CHECK(model.expected_utility_at(500) == Catch::Approx(0.0).margin(1e-12));
  CHECK(model.expected_utility_at(2000) == 0.0);  // floored, never negative
}

namespace {

// Two handmade single-issue hypotheses over price in [0, 10]: one says the
// opponent wants a high price, the other a low price.
OpponentUtilityModel two_hypothesis_model(double sigma = 0.25) {
  Hypothesis high;
  high.ranking = {1};
  high.weights = {1.0};
  high.valuations.push_back(TriangularFn::increasing(0.0, 10.0));
  high.probability = 0.5;
  Hypothesis low = high;
  low.valuations[0] = TriangularFn::decreasing(0.0, 10.0);
  return OpponentUtilityModel(helpers::price_domain(), {high, low}, 0.002, sigma);
}

}  // namespace

TEST_CASE("updates follow Bayes' rule exactly", "[opponent][oracle]") {
  auto model = two_hypothesis_model();

  // Consistent evidence: offers near the top of the range, where the
  // "high" hypothesis puts utility close to the expected concession line.
  const std::vector<std::int64_t> offers{10, 9, 10, 9, 10};

  // Oracle: explicit products of Gaussian likelihoods, normalized once.
  double prior_high = 0.5, prior_low = 0.5;
  double prev_high = 0.5;
  int round = 1;
  for (const auto price : offers) {
    const double expected = std::max(0.0, 1.0 - 0.002 * round);
    const double u_high = static_cast<double>(price) / 10.0;
    const double u_low = 1.0 - u_high;
    prior_high *= oracle::normal_pdf(u_high, expected, 0.25);
    prior_low *= oracle::normal_pdf(u_low, expected, 0.25);
    const double z = prior_high + prior_low;

    model.update(helpers::price_bid(price), round);
    const double p_high = model.hypotheses()[0].probability;
    const double p_low = model.hypotheses()[1].probability;
    CHECK(p_high == Catch::Approx(prior_high / z).margin(1e-12));
    CHECK(p_low == Catch::Approx(prior_low / z).margin(1e-12));
    CHECK(p_high + p_low == Catch::Approx(1.0).margin(1e-12));

    // Evidence for "high" accumulates monotonically on this tape.
    CHECK(p_high > prev_high);
    prev_high = p_high;
    ++round;
  }
  CHECK(model.hypotheses()[0].probability > 0.9);
  CHECK(model.underflow_count() == 0);
}

TEST_CASE("update ordering is hypothesis-symmetric", "[opponent]") {
  auto forward = two_hypothesis_model();
  // The same model with the hypothesis list reversed.
  auto hyps = forward.hypotheses();
  std::reverse(hyps.begin(), hyps.end());
  OpponentUtilityModel reversed(helpers::price_domain(), hyps);

  for (int round = 1; round <= 4; ++round) {
    forward.update(helpers::price_bid(8), round);
    reversed.update(helpers::price_bid(8), round);
  }
  CHECK(forward.hypotheses()[0].probability ==
        Catch::Approx(reversed.hypotheses()[1].probability).margin(1e-15));
  CHECK(forward.hypotheses()[1].probability ==
        Catch::Approx(reversed.hypotheses()[0].probability).margin(1e-15));
}

TEST_CASE("estimated utility is the probability-weighted mixture", "[opponent]") {
  auto model = two_hypothesis_model();
  // At equal priors the two ramps average to 1/2 everywhere.
  CHECK(model.estimated_utility(helpers::price_bid(7)) == Catch::Approx(0.5));
  CHECK(model.estimated_utility(std::vector<double>{2.0}) == Catch::Approx(0.5));

  // After updates the mixture shifts; re-derive it from the public state.
  for (int round = 1; round <= 3; ++round)
    model.update(helpers::price_bid(10), round);
  const auto& hyps = model.hypotheses();
  for (std::int64_t price = 0; price <= 10; ++price) {
    double expected = 0.0;
    for (const auto& hyp : hyps)
      expected +=
          hyp.probability * hyp.utility_of({static_cast<double>(price)});
    CHECK(model.estimated_utility(helpers::price_bid(price)) ==
          Catch::Approx(expected).margin(1e-12));
  }

  // A single-hypothesis model is a fixed point of updating.
  Hypothesis only;
  only.ranking = {1};
  only.weights = {1.0};
  only.valuations.push_back(TriangularFn::increasing(0.0, 10.0));
  only.probability = 1.0;
  OpponentUtilityModel single(helpers::price_domain(), {only});
  single.update(helpers::price_bid(2), 1);
  CHECK(single.hypotheses()[0].probability == 1.0);
  CHECK(single.estimated_utility(helpers::price_bid(6)) == Catch::Approx(0.6));
}

TEST_CASE("likelihood underflow keeps the prior and is counted", "[opponent]") {
  auto model = two_hypothesis_model(1e-300);
  const double before_high = model.hypotheses()[0].probability;
  model.update(helpers::price_bid(5), 1);  // both residuals huge / sigma tiny
  CHECK(model.underflow_count() == 1);
  CHECK(model.hypotheses()[0].probability == before_high);
  CHECK(model.hypotheses()[0].probability +
            model.hypotheses()[1].probability ==
        Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("constructor validation catches degenerate models", "[opponent]") {
  CHECK_THROWS_AS(OpponentUtilityModel(helpers::price_domain(), {}),
                  std::invalid_argument);

  Hypothesis zero;
  zero.ranking = {1};
  zero.weights = {1.0};
  zero.valuations.push_back(TriangularFn::increasing(0.0, 10.0));
  zero.probability = 0.0;
  CHECK_THROWS_AS(OpponentUtilityModel(helpers::price_domain(), {zero}),
                  std::invalid_argument);

  zero.probability = 2.0;  // non-normalized priors are fine: they get scaled
  Hypothesis other = zero;
  other.probability = 6.0;
  OpponentUtilityModel scaled(helpers::price_domain(), {zero, other});
  CHECK(scaled.hypotheses()[0].probability == Catch::Approx(0.25));
  CHECK(scaled.hypotheses()[1].probability == Catch::Approx(0.75));

  CHECK_THROWS_AS(
      OpponentUtilityModel(helpers::price_domain(), {zero}, 0.002, 0.0),
      std::invalid_argument);
}

TEST_CASE("strategy model needs two offers before it fits", "[opponent][gp]") {
  OpponentStrategyModel model(helpers::price_domain());
  CHECK(!model.fitted());
  CHECK(model.observed() == 0);
  CHECK_THROWS_AS(model.posterior(1), std::logic_error);

  Rng rng(9);
  const Bid draw = model.predict_bid(1, rng);  // uniform fallback
  CHECK(validate_bid(model.domain(), draw).empty());
  CHECK(model.fallback_count() == 1);

  model.observe(helpers::price_bid(9));
  CHECK(!model.fitted());
  CHECK(model.observed() == 1);

  model.observe(helpers::price_bid(8));
  CHECK(model.fitted());
  CHECK(model.observed() == 2);
  REQUIRE(model.model() != nullptr);
  CHECK(model.model()->size() == 2);
}

TEST_CASE("a constant offer stream predicts itself", "[opponent][gp]") {
  OpponentStrategyModel model(helpers::price_domain());
  for (int i = 0; i < 5; ++i) model.observe(helpers::price_bid(5));
  REQUIRE(model.fitted());

  Rng rng(17);
  for (int i = 0; i < 12; ++i) {
    const Bid predicted = model.predict_bid(6 + i % 3, rng);
    CHECK(predicted == helpers::price_bid(5));
  }
  CHECK(model.fallback_count() == 0);
}

TEST_CASE("predictions always land inside the domain", "[opponent][gp]") {
  // A steeply conceding stream extrapolates below the range; the prediction
  // must come back rounded and clamped into the issue's actual values.
  OpponentStrategyModel model(helpers::mixed_domain());
  const auto& domain = model.domain();
  Rng rng(29);
  for (int t = 0; t < 6; ++t) {
    Bid offer{{"units", std::int64_t{std::max<std::int64_t>(0, 9 - 3 * t)}},
              {"ratio", std::max(0.0, 0.9 - 0.25 * t)},
              {"tier", std::string(t % 2 == 0 ? "gold" : "bronze")}};
    model.observe(offer);
  }
  REQUIRE(model.fitted());
  for (int i = 0; i < 50; ++i) {
    const Bid predicted = model.predict_bid(7 + i % 3, rng);
    CHECK(validate_bid(domain, predicted).empty());
  }
}

TEST_CASE("posterior lookups agree between table and direct prediction",
          "[opponent][gp]") {
  OpponentStrategyModel model(helpers::price_domain());
  for (int t = 0; t < 4; ++t)
    model.observe(helpers::price_bid(9 - 2 * t));
  REQUIRE(model.fitted());

  // Rounds inside the precomputed horizon and far beyond it must agree with
  // the model's own predict().
  for (const int round : {5, 6, 20, 200}) {
    const auto& via_lookup = model.posterior(round);
    const auto direct = model.model()->predict(round);
    REQUIRE(via_lookup.size() == direct.size());
    for (std::size_t d = 0; d < direct.size(); ++d) {
      CHECK(via_lookup[d].mean == direct[d].mean);
      CHECK(via_lookup[d].variance == direct[d].variance);
    }
  }
}

TEST_CASE("prediction sampling is deterministic per seed", "[opponent][gp]") {
  OpponentStrategyModel a(helpers::mixed_domain()), b(helpers::mixed_domain());
  Rng feed(55);
  for (int t = 0; t < 5; ++t) {
    const Bid offer = uniform_bid(a.domain(), feed);
    a.observe(offer);
    b.observe(offer);
  }
  Rng ra(7), rb(7);
  for (int i = 0; i < 10; ++i)
    CHECK(a.predict_bid(6 + i, ra) == b.predict_bid(6 + i, rb));
}

TEST_CASE("the acceptance rule compares incoming against the predicted next bid",
          "[opponent]") {
  // Unfitted strategy model: only near-top offers pass the 0.9 bar.
  Hypothesis only;
  only.ranking = {1};
  only.weights = {1.0};
  only.valuations.push_back(TriangularFn::increasing(0.0, 10.0));
  only.probability = 1.0;
  OpponentUtilityModel wants_high(helpers::price_domain(), {only});
  OpponentStrategyModel unfitted(helpers::price_domain());
  Rng rng(1);
  CHECK(opponent_accepts(wants_high, unfitted, helpers::price_bid(10), 1, rng));
  CHECK(opponent_accepts(wants_high, unfitted, helpers::price_bid(9), 1, rng));
  CHECK(!opponent_accepts(wants_high, unfitted, helpers::price_bid(5), 1, rng));

  // Fitted on a constant stream, the predicted next bid is that constant, so
  // the bar sits exactly at its utility.
  OpponentStrategyModel constant(helpers::price_domain());
  for (int i = 0; i < 4; ++i) constant.observe(helpers::price_bid(5));
  REQUIRE(constant.fitted());
  CHECK(opponent_accepts(wants_high, constant, helpers::price_bid(5), 5, rng));
  CHECK(opponent_accepts(wants_high, constant, helpers::price_bid(8), 5, rng));
  CHECK(!opponent_accepts(wants_high, constant, helpers::price_bid(2), 5, rng));
}
