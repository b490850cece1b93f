#pragma once

// Opponent modeling: a Bayesian estimate of the opponent's utility function
// (hypotheses over issue rankings and triangular valuations) and a GP
// regression of their offer stream used to predict future bids and to decide
// whether the opponent would accept an offer.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mocana/core.hpp"
#include "mocana/gp.hpp"
#include "mocana/rng.hpp"

namespace mocana {

// Piecewise-affine valuation on [a, b] with range [0, 1]: monotone up,
// monotone down, or a peak rising to 1 at c and falling back to 0 at b.
struct TriangularFn {
  enum class Shape { Increasing, Decreasing, Peaked };

  Shape shape = Shape::Increasing;
  double a = 0.0;
  double b = 1.0;
  double c = 0.5;  // peak, Peaked only

  static TriangularFn increasing(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("TriangularFn: need a < b");
    return {Shape::Increasing, a, b, 0.0};
  }
  static TriangularFn decreasing(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("TriangularFn: need a < b");
    return {Shape::Decreasing, a, b, 0.0};
  }
  static TriangularFn peaked(double a, double c, double b) {
    if (!(a < c && c < b))
      throw std::invalid_argument("TriangularFn: need a < c < b");
    return {Shape::Peaked, a, b, c};
  }

  // Values outside [a, b] clamp to the nearest endpoint's value, so any
  // valid bid can be scored.
  double eval(double v) const {
    v = std::clamp(v, a, b);
    switch (shape) {
      case Shape::Increasing: return (v - a) / (b - a);
      case Shape::Decreasing: return (b - v) / (b - a);
      case Shape::Peaked:
        return v <= c ? (v - a) / (c - a) : (b - v) / (b - c);
    }
    return 0.0;
  }
};

inline double triangular_eval(const TriangularFn& fn, double v) {
  return fn.eval(v);
}

// Weight of the issue at rank position r (1 = most important) among m
// issues: 2(m - r + 1) / (m (m + 1)). A full ranking's weights sum to 1.
inline double rank_to_weight(int rank, int issue_count) {
  if (rank < 1 || rank > issue_count)
    throw std::invalid_argument("rank_to_weight: rank out of range");
  const double m = issue_count;
  return 2.0 * (m - rank + 1) / (m * (m + 1.0));
}

// Hypothesized valuation of a categorical issue: category index -> level.
struct CategoryLevels {
  std::vector<double> levels;
};

// One guess at the opponent's preferences: an importance ranking of the
// issues (which fixes the weights) plus a simple valuation per issue.
struct Hypothesis {
  std::vector<int> ranking;  // ranking[i] = rank position of issue i, 1-based
  std::vector<double> weights;
  std::vector<std::variant<TriangularFn, CategoryLevels>> valuations;
  double probability = 0.0;

  // Utility of a bid given in real coordinates (see bid_to_reals).
  double utility_of(const std::vector<double>& reals) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (const auto* tri = std::get_if<TriangularFn>(&valuations[i])) {
        acc += weights[i] * tri->eval(reals[i]);
      } else {
        const auto& levels = std::get<CategoryLevels>(valuations[i]).levels;
        double idx = std::nearbyint(reals[i]);
        idx = std::clamp(idx, 0.0, static_cast<double>(levels.size() - 1));
        acc += weights[i] * levels[static_cast<std::size_t>(idx)];
      }
    }
    return acc;
  }
};

// Bayesian mixture over utility hypotheses. The learning signal assumes the
// opponent concedes linearly: their k-th offer is expected to be worth about
// 1 - concession_rate * k to them, and each hypothesis is scored by a
// Gaussian likelihood of its utility for the observed bid around that line.
class OpponentUtilityModel {
 public:
  OpponentUtilityModel() = default;

  OpponentUtilityModel(NegotiationDomain domain, std::vector<Hypothesis> hypotheses,
                       double concession_rate = 0.002, double likelihood_sigma = 0.25)
      : domain_(std::move(domain)),
        hypotheses_(std::move(hypotheses)),
        concession_rate_(concession_rate),
        likelihood_sigma_(likelihood_sigma) {
    if (hypotheses_.empty())
      throw std::invalid_argument("OpponentUtilityModel: no hypotheses");
    if (!(likelihood_sigma_ > 0.0))
      throw std::invalid_argument("OpponentUtilityModel: sigma must be > 0");
    double sum = 0.0;
    for (const auto& h : hypotheses_) sum += h.probability;
    if (!(sum > 0.0))
      throw std::invalid_argument("OpponentUtilityModel: zero prior mass");
    for (auto& h : hypotheses_) h.probability /= sum;
  }

  // `count` hypotheses with uniform prior: ranking drawn uniformly, each
  // numeric issue gets one of the three triangular shapes uniformly (peak
  // uniform inside the range), each categorical issue a random permutation
  // of evenly spaced levels.
  static OpponentUtilityModel generate(const NegotiationDomain& domain, int count,
                                       Rng& rng, double concession_rate = 0.002,
                                       double likelihood_sigma = 0.25) {
    if (count < 1)
      throw std::invalid_argument("OpponentUtilityModel: count must be >= 1");
    const auto m = static_cast<int>(domain.issues.size());
    std::vector<Hypothesis> hypotheses;
    hypotheses.reserve(count);
    for (int h = 0; h < count; ++h) {
      Hypothesis hyp;
      hyp.ranking.resize(m);
      for (int i = 0; i < m; ++i) hyp.ranking[i] = i + 1;
      rng.shuffle(hyp.ranking);
      hyp.weights.resize(m);
      for (int i = 0; i < m; ++i) hyp.weights[i] = rank_to_weight(hyp.ranking[i], m);
      hyp.valuations.reserve(m);
      for (const auto& issue : domain.issues)
        hyp.valuations.push_back(random_valuation(issue, rng));
      hyp.probability = 1.0 / count;
      hypotheses.push_back(std::move(hyp));
    }
    return OpponentUtilityModel(domain, std::move(hypotheses), concession_rate,
                                likelihood_sigma);
  }

  const std::vector<Hypothesis>& hypotheses() const { return hypotheses_; }
  double concession_rate() const { return concession_rate_; }
  double likelihood_sigma() const { return likelihood_sigma_; }

  // Expected opponent utility of their own offer at `round` under the
  // linear-concession assumption.
  double expected_utility_at(int round) const {
    return std::max(0.0, 1.0 - concession_rate_ * round);
  }

  // Multiply each hypothesis's probability by the likelihood of the
  // observed bid and renormalize. If every likelihood underflows the prior
  // is kept unchanged and the event is counted.
  void update(const Bid& observed, int round) {
    const std::vector<double> reals = bid_to_reals(domain_, observed);
    const double expected = expected_utility_at(round);
    double sum = 0.0;
    std::vector<double> posterior(hypotheses_.size());
    for (std::size_t i = 0; i < hypotheses_.size(); ++i) {
      const double z =
          (hypotheses_[i].utility_of(reals) - expected) / likelihood_sigma_;
      constexpr double inv_sqrt_two_pi = 0.3989422804014326779399460599344;
      const double likelihood =
          inv_sqrt_two_pi / likelihood_sigma_ * std::exp(-0.5 * z * z);
      posterior[i] = hypotheses_[i].probability * likelihood;
      sum += posterior[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      ++underflow_count_;
      return;
    }
    for (std::size_t i = 0; i < hypotheses_.size(); ++i)
      hypotheses_[i].probability = posterior[i] / sum;
  }

  // Probability-weighted utility across hypotheses; in [0, 1].
  double estimated_utility(const std::vector<double>& reals) const {
    double acc = 0.0;
    for (const auto& h : hypotheses_) acc += h.probability * h.utility_of(reals);
    return acc;
  }
  double estimated_utility(const Bid& bid) const {
    return estimated_utility(bid_to_reals(domain_, bid));
  }

  int underflow_count() const { return underflow_count_; }

 private:
  static std::variant<TriangularFn, CategoryLevels> random_valuation(
      const Issue& issue, Rng& rng) {
    if (issue.is_categorical()) {
      const auto& cats = std::get<Categorical>(issue.kind).categories;
      CategoryLevels cl;
      cl.levels.resize(cats.size());
      for (std::size_t i = 0; i < cats.size(); ++i)
        cl.levels[i] = cats.size() == 1
                           ? 1.0
                           : static_cast<double>(i) / (cats.size() - 1);
      rng.shuffle(cl.levels);
      return cl;
    }
    double lo, hi;
    if (const auto* ir = std::get_if<IntegerRange>(&issue.kind)) {
      lo = static_cast<double>(ir->lo);
      hi = static_cast<double>(ir->hi);
    } else {
      const auto& cr = std::get<ContinuousRange>(issue.kind);
      lo = cr.lo;
      hi = cr.hi;
    }
    switch (rng.uniform_int(0, 2)) {
      case 0: return TriangularFn::increasing(lo, hi);
      case 1: return TriangularFn::decreasing(lo, hi);
      default: {
        double c = rng.uniform(lo, hi);
        while (!(lo < c && c < hi)) c = rng.uniform(lo, hi);
        return TriangularFn::peaked(lo, c, hi);
      }
    }
  }

  NegotiationDomain domain_;
  std::vector<Hypothesis> hypotheses_;
  double concession_rate_ = 0.002;
  double likelihood_sigma_ = 0.25;
  int underflow_count_ = 0;
};

// GP model of the opponent's offer stream: offer k (1-based) is a training
// point at round k, one output dimension per issue. Hyperparameters are
// refitted on a geometric schedule as offers accumulate (every offer while
// the series is short, then every ~30% growth); the posterior for the next
// few rounds is cached eagerly because rollouts query only integer rounds
// just past the observed horizon.
class OpponentStrategyModel {
 public:
  explicit OpponentStrategyModel(
      NegotiationDomain domain,
      gp::KernelFamily family = gp::KernelFamily::RationalQuadratic)
      : domain_(std::move(domain)), family_(family) {}

  void observe(const Bid& bid) {
    offers_.push_back(bid_to_reals(domain_, bid));
    const std::size_t n = offers_.size();
    if (n < 2) return;

    std::vector<double> rounds(n);
    for (std::size_t i = 0; i < n; ++i) rounds[i] = static_cast<double>(i + 1);
    std::vector<std::vector<double>> targets(domain_.issues.size(),
                                             std::vector<double>(n));
    for (std::size_t d = 0; d < targets.size(); ++d)
      for (std::size_t i = 0; i < n; ++i) targets[d][i] = offers_[i][d];

    if (specs_.empty() || n <= 4 || n >= next_refit_) {
      specs_.clear();
      for (const auto& series : targets)
        specs_.push_back(gp::fit_hyperparams(rounds, series, family_).spec);
      next_refit_ = std::max(n + 2, static_cast<std::size_t>(n * 1.3));
    }
    model_.emplace(std::move(rounds), std::move(targets), specs_);

    posterior_base_ = static_cast<int>(n) + 1;
    posterior_table_.clear();
    posterior_table_.reserve(kHorizon);
    for (int r = 0; r < kHorizon; ++r)
      posterior_table_.push_back(model_->predict(posterior_base_ + r));
  }

  int observed() const { return static_cast<int>(offers_.size()); }
  bool fitted() const { return model_.has_value(); }
  const gp::GpModel* model() const { return model_ ? &*model_ : nullptr; }
  const NegotiationDomain& domain() const { return domain_; }

  // Predictive distribution per issue at an (integer) future round.
  const std::vector<gp::GpPosterior>& posterior(int round) const {
    if (!model_) throw std::logic_error("strategy model not fitted");
    const int idx = round - posterior_base_;
    if (idx >= 0 && idx < static_cast<int>(posterior_table_.size()))
      return posterior_table_[static_cast<std::size_t>(idx)];
    scratch_ = model_->predict(round);
    return scratch_;
  }

  // One sampled future offer in real coordinates, clamped/rounded into the
  // domain. Falls back to a uniform draw while fewer than 2 offers are
  // observed (GP needs two points); the fallback is counted.
  std::vector<double> predict_reals(int round, Rng& rng) const {
    const auto& issues = domain_.issues;
    std::vector<double> reals(issues.size());
    if (!model_) {
      ++fallback_count_;
      for (std::size_t i = 0; i < issues.size(); ++i)
        reals[i] = value_to_real(issues[i], uniform_value(issues[i], rng));
      return reals;
    }
    const auto& post = posterior(round);
    for (std::size_t i = 0; i < issues.size(); ++i) {
      const double draw = rng.normal(post[i].mean, std::sqrt(post[i].variance));
      reals[i] = value_to_real(issues[i], real_to_value(issues[i], draw));
    }
    return reals;
  }

  Bid predict_bid(int round, Rng& rng) const {
    return reals_to_bid(domain_, predict_reals(round, rng));
  }

  int fallback_count() const { return fallback_count_; }

 private:
  static IssueValue uniform_value(const Issue& issue, Rng& rng) {
    if (const auto* r = std::get_if<IntegerRange>(&issue.kind))
      return rng.uniform_int(r->lo, r->hi);
    if (const auto* c = std::get_if<ContinuousRange>(&issue.kind))
      return rng.uniform(c->lo, c->hi);
    const auto& cats = std::get<Categorical>(issue.kind).categories;
    return cats[static_cast<std::size_t>(rng.uniform_int(0, cats.size() - 1))];
  }

  static constexpr int kHorizon = 64;

  NegotiationDomain domain_;
  gp::KernelFamily family_;
  std::vector<std::vector<double>> offers_;
  std::vector<gp::KernelSpec> specs_;
  std::size_t next_refit_ = 0;
  std::optional<gp::GpModel> model_;
  int posterior_base_ = 0;
  std::vector<std::vector<gp::GpPosterior>> posterior_table_;
  mutable std::vector<gp::GpPosterior> scratch_;
  mutable int fallback_count_ = 0;
};

inline Bid predict_opponent_bid(const OpponentStrategyModel& strategy, int round,
                                Rng& rng) {
  return strategy.predict_bid(round, rng);
}

// The modeled acceptance rule: the opponent accepts `incoming` iff they like
// it at least as much as the bid they are predicted to make next. Before the
// strategy model is fitted, fall back to a high-utility bar.
inline bool opponent_accepts(const OpponentUtilityModel& utility_model,
                             const OpponentStrategyModel& strategy_model,
                             const std::vector<double>& incoming_reals, int round,
                             Rng& rng) {
  if (!strategy_model.fitted())
    return utility_model.estimated_utility(incoming_reals) >= 0.9;
  const std::vector<double> predicted = strategy_model.predict_reals(round, rng);
  return utility_model.estimated_utility(incoming_reals) >=
         utility_model.estimated_utility(predicted);
}

inline bool opponent_accepts(const OpponentUtilityModel& utility_model,
                             const OpponentStrategyModel& strategy_model,
                             const Bid& incoming, int round, Rng& rng) {
  return opponent_accepts(utility_model, strategy_model,
                          bid_to_reals(strategy_model.domain(), incoming), round,
                          rng);
}

}  // namespace mocana
