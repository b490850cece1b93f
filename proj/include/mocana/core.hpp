#pragma once

// Core negotiation types: issues, domains, bids, messages, histories and
// additive utility functions. Everything here is protocol-level; agents and
// search live in their own headers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mocana/rng.hpp"

namespace mocana {

// ---------------------------------------------------------------------------
// Issues and domains

struct IntegerRange {
  std::int64_t lo = 0;
  std::int64_t hi = 1;
};

struct ContinuousRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct Categorical {
  std::vector<std::string> categories;
};

struct Issue {
  std::string name;
  std::variant<IntegerRange, ContinuousRange, Categorical> kind;

  bool is_integer() const { return std::holds_alternative<IntegerRange>(kind); }
  bool is_continuous() const { return std::holds_alternative<ContinuousRange>(kind); }
  bool is_categorical() const { return std::holds_alternative<Categorical>(kind); }
};

struct NegotiationDomain {
  std::vector<Issue> issues;

  const Issue* find(const std::string& name) const {
    for (const auto& issue : issues)
      if (issue.name == name) return &issue;
    return nullptr;
  }

  // Throws std::invalid_argument when the domain is malformed: no issues,
  // duplicate names, inverted ranges, or empty/duplicate category lists.
  void validate() const {
    if (issues.empty()) throw std::invalid_argument("domain has no issues");
    for (std::size_t i = 0; i < issues.size(); ++i) {
      const Issue& issue = issues[i];
      if (issue.name.empty()) throw std::invalid_argument("issue with empty name");
      for (std::size_t j = i + 1; j < issues.size(); ++j)
        if (issues[j].name == issue.name)
          throw std::invalid_argument("duplicate issue name: " + issue.name);
      if (const auto* r = std::get_if<IntegerRange>(&issue.kind)) {
        if (r->lo >= r->hi)
          throw std::invalid_argument("issue " + issue.name + ": lo must be < hi");
      } else if (const auto* c = std::get_if<ContinuousRange>(&issue.kind)) {
        if (!(c->lo < c->hi))
          throw std::invalid_argument("issue " + issue.name + ": lo must be < hi");
      } else {
        const auto& cats = std::get<Categorical>(issue.kind).categories;
        if (cats.empty())
          throw std::invalid_argument("issue " + issue.name + ": no categories");
        for (std::size_t a = 0; a < cats.size(); ++a)
          for (std::size_t b = a + 1; b < cats.size(); ++b)
            if (cats[a] == cats[b])
              throw std::invalid_argument("issue " + issue.name +
                                          ": duplicate category " + cats[a]);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Bids

using IssueValue = std::variant<std::int64_t, double, std::string>;
using Bid = std::map<std::string, IssueValue>;

// Empty result means the bid is well-formed for the domain; otherwise a list
// of human-readable problems (missing issue, extra issue, wrong type, value
// out of range / unknown category).
inline std::vector<std::string> validate_bid(const NegotiationDomain& domain,
                                             const Bid& bid) {
  std::vector<std::string> problems;
  for (const auto& issue : domain.issues) {
    auto it = bid.find(issue.name);
    if (it == bid.end()) {
      problems.push_back("missing issue: " + issue.name);
      continue;
    }
    const IssueValue& value = it->second;
    if (const auto* r = std::get_if<IntegerRange>(&issue.kind)) {
      const auto* v = std::get_if<std::int64_t>(&value);
      if (!v)
        problems.push_back("issue " + issue.name + ": expected integer value");
      else if (*v < r->lo || *v > r->hi)
        problems.push_back("issue " + issue.name + ": value " +
                           std::to_string(*v) + " out of range");
    } else if (const auto* c = std::get_if<ContinuousRange>(&issue.kind)) {
      const auto* v = std::get_if<double>(&value);
      if (!v)
        problems.push_back("issue " + issue.name + ": expected real value");
      else if (!(*v >= c->lo && *v <= c->hi))
        problems.push_back("issue " + issue.name + ": value out of range");
    } else {
      const auto& cats = std::get<Categorical>(issue.kind).categories;
      const auto* v = std::get_if<std::string>(&value);
      if (!v)
        problems.push_back("issue " + issue.name + ": expected category value");
      else if (std::find(cats.begin(), cats.end(), *v) == cats.end())
        problems.push_back("issue " + issue.name + ": unknown category " + *v);
    }
  }
  for (const auto& [name, value] : bid)
    if (!domain.find(name)) problems.push_back("unknown issue: " + name);
  return problems;
}

// ---------------------------------------------------------------------------
// Bid <-> real-vector conversions. Regression and hypothesis scoring both
// work on numeric coordinates: integer and continuous issues map to their own
// value, categories map to their index in the domain's category list.

inline double value_to_real(const Issue& issue, const IssueValue& value) {
  if (const auto* v = std::get_if<std::int64_t>(&value)) {
    return static_cast<double>(*v);
  }
  if (const auto* v = std::get_if<double>(&value)) {
    return *v;
  }
  const auto& cats = std::get<Categorical>(issue.kind).categories;
  const auto& name = std::get<std::string>(value);
  const auto it = std::find(cats.begin(), cats.end(), name);
  if (it == cats.end())
    throw std::invalid_argument("issue " + issue.name + ": unknown category " + name);
  return static_cast<double>(it - cats.begin());
}

// Inverse of value_to_real, with clamping into the issue's range and rounding
// for the discrete kinds. Accepts any real (e.g. a regression sample).
inline IssueValue real_to_value(const Issue& issue, double x) {
  if (const auto* r = std::get_if<IntegerRange>(&issue.kind)) {
    const double rounded = std::nearbyint(x);
    const double clamped =
        std::clamp(rounded, static_cast<double>(r->lo), static_cast<double>(r->hi));
    return static_cast<std::int64_t>(clamped);
  }
  if (const auto* c = std::get_if<ContinuousRange>(&issue.kind)) {
    if (!(x == x)) return c->lo;  // NaN guard: degenerate sample maps to lo
    return std::clamp(x, c->lo, c->hi);
  }
  const auto& cats = std::get<Categorical>(issue.kind).categories;
  const auto hi = static_cast<double>(cats.size() - 1);
  double idx = std::nearbyint(x);
  if (!(idx == idx)) idx = 0.0;
  idx = std::clamp(idx, 0.0, hi);
  return cats[static_cast<std::size_t>(idx)];
}

inline std::vector<double> bid_to_reals(const NegotiationDomain& domain,
                                        const Bid& bid) {
  std::vector<double> reals;
  reals.reserve(domain.issues.size());
  for (const auto& issue : domain.issues)
    reals.push_back(value_to_real(issue, bid.at(issue.name)));
  return reals;
}

inline Bid reals_to_bid(const NegotiationDomain& domain,
                        const std::vector<double>& reals) {
  if (reals.size() != domain.issues.size())
    throw std::invalid_argument("real vector has wrong dimension");
  Bid bid;
  for (std::size_t i = 0; i < domain.issues.size(); ++i)
    bid[domain.issues[i].name] = real_to_value(domain.issues[i], reals[i]);
  return bid;
}

// One bid drawn uniformly per issue (uniform value in range, uniform
// category). This is the proposal sampler used by search and by the
// baseline agents.
inline Bid uniform_bid(const NegotiationDomain& domain, Rng& rng) {
  Bid bid;
  for (const auto& issue : domain.issues) {
    if (const auto* r = std::get_if<IntegerRange>(&issue.kind)) {
      bid[issue.name] = rng.uniform_int(r->lo, r->hi);
    } else if (const auto* c = std::get_if<ContinuousRange>(&issue.kind)) {
      bid[issue.name] = rng.uniform(c->lo, c->hi);
    } else {
      const auto& cats = std::get<Categorical>(issue.kind).categories;
      bid[issue.name] =
          cats[static_cast<std::size_t>(rng.uniform_int(0, cats.size() - 1))];
    }
  }
  return bid;
}

// ---------------------------------------------------------------------------
// Messages and histories

enum class Performative { Propose, Accept, Reject };

struct Message {
  Performative performative = Performative::Propose;
  std::optional<Bid> bid;  // present iff performative == Propose

  static Message propose(Bid b) { return {Performative::Propose, std::move(b)}; }
  static Message accept() { return {Performative::Accept, std::nullopt}; }
  static Message reject() { return {Performative::Reject, std::nullopt}; }
};

// Player (1 or 2) whose turn it is after `length` messages. Player 1 opens,
// turns strictly alternate.
inline int turn_player_at(std::size_t length) {
  return length % 2 == 0 ? 1 : 2;
}

// Player (1 or 2) who produced the message at `index` (0-based).
inline int message_player(std::size_t index) {
  return index % 2 == 0 ? 1 : 2;
}

struct History {
  std::vector<Message> messages;

  std::size_t size() const { return messages.size(); }
  bool empty() const { return messages.empty(); }

  // True as soon as a response message closed the thread.
  bool ends_negotiation() const {
    return !messages.empty() &&
           messages.back().performative != Performative::Propose;
  }

  // Appends with protocol checks: a Propose must carry a bid, Accept and
  // Reject must not, responses need a standing proposal, and nothing may
  // follow a closed negotiation. Violations throw std::logic_error.
  void append(Message m) {
    if (ends_negotiation())
      throw std::logic_error("history already ended");
    if (m.performative == Performative::Propose) {
      if (!m.bid) throw std::logic_error("propose without bid");
    } else {
      if (m.bid) throw std::logic_error("response carries a bid");
      if (messages.empty())
        throw std::logic_error("accept/reject with no standing proposal");
    }
    messages.push_back(std::move(m));
  }

  // Most recent proposal's bid, or nullptr when none exists.
  const Bid* last_proposal() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
      if (it->performative == Performative::Propose) return &*it->bid;
    return nullptr;
  }
};

inline int turn_player(const History& history) {
  return turn_player_at(history.size());
}

// ---------------------------------------------------------------------------
// Utility functions. Additive over issues: u(bid) = sum_j w_j * v_j(bid_j),
// with weights summing to 1 and every per-issue valuation mapping into
// [0, 1], so utilities live in [0, 1] as well.

struct LinearValuation {
  double lo = 0.0, hi = 1.0;  // value range the ramp spans
  double y_lo = 0.0, y_hi = 1.0;
};

// Piecewise-linear bump: 0 at a, rises to 1 at the peak c, falls back to 0
// at b. Degenerate edges (c == a or c == b) make that side a step.
struct TriangularValuation {
  double a = 0.0, c = 0.5, b = 1.0;
};

struct TableValuation {
  // Keyed by category name, or by the decimal text of the integer value.
  std::map<std::string, double> scores;
};

struct PolyValuation {
  std::vector<double> coeffs;  // c0 + c1*x + c2*x^2 + ...
};

using Valuation =
    std::variant<LinearValuation, TriangularValuation, TableValuation, PolyValuation>;

namespace detail {

inline double numeric_value(const IssueValue& value, const char* what) {
  if (const auto* v = std::get_if<std::int64_t>(&value))
    return static_cast<double>(*v);
  if (const auto* v = std::get_if<double>(&value)) return *v;
  throw std::invalid_argument(std::string(what) + " needs a numeric value");
}

}  // namespace detail

// Per-issue valuation in [0, 1]. Numeric shapes clamp their input into the
// declared range; polynomial output is clamped into [0, 1].
inline double eval_valuation(const Valuation& valuation, const IssueValue& value) {
  if (const auto* lin = std::get_if<LinearValuation>(&valuation)) {
    const double x = std::clamp(detail::numeric_value(value, "linear valuation"),
                                std::min(lin->lo, lin->hi),
                                std::max(lin->lo, lin->hi));
    if (lin->hi == lin->lo) return std::clamp(lin->y_lo, 0.0, 1.0);
    const double t = (x - lin->lo) / (lin->hi - lin->lo);
    return std::clamp(lin->y_lo + t * (lin->y_hi - lin->y_lo), 0.0, 1.0);
  }
  if (const auto* tri = std::get_if<TriangularValuation>(&valuation)) {
    const double x = std::clamp(detail::numeric_value(value, "triangular valuation"),
                                tri->a, tri->b);
    if (x <= tri->c)
      return tri->c == tri->a ? 1.0 : (x - tri->a) / (tri->c - tri->a);
    return tri->b == tri->c ? 1.0 : (tri->b - x) / (tri->b - tri->c);
  }
  if (const auto* table = std::get_if<TableValuation>(&valuation)) {
    std::string key;
    if (const auto* s = std::get_if<std::string>(&value))
      key = *s;
    else if (const auto* i = std::get_if<std::int64_t>(&value))
      key = std::to_string(*i);
    else
      throw std::invalid_argument("table valuation needs a category or integer");
    const auto it = table->scores.find(key);
    if (it == table->scores.end())
      throw std::invalid_argument("table valuation has no entry for " + key);
    return std::clamp(it->second, 0.0, 1.0);
  }
  const auto& poly = std::get<PolyValuation>(valuation);
  const double x = detail::numeric_value(value, "polynomial valuation");
  double acc = 0.0;
  for (auto it = poly.coeffs.rbegin(); it != poly.coeffs.rend(); ++it)
    acc = acc * x + *it;
  return std::clamp(acc, 0.0, 1.0);
}

struct UtilityFunction {
  std::map<std::string, double> weights;
  std::map<std::string, Valuation> valuations;
  // Payoffs of the two no-deal endings: an explicit Reject, and running
  // into a round/time bound.
  double reject_utility = 0.0;
  double no_agreement_utility = 0.0;

  // Checks coverage of the domain and that weights are non-negative and sum
  // to 1 (within 1e-9). Throws std::invalid_argument.
  void validate(const NegotiationDomain& domain) const {
    double sum = 0.0;
    for (const auto& issue : domain.issues) {
      const auto w = weights.find(issue.name);
      if (w == weights.end())
        throw std::invalid_argument("no weight for issue " + issue.name);
      if (w->second < 0.0)
        throw std::invalid_argument("negative weight for issue " + issue.name);
      sum += w->second;
      if (!valuations.count(issue.name))
        throw std::invalid_argument("no valuation for issue " + issue.name);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("issue weights must sum to 1");
  }
};

inline double utility(const UtilityFunction& ufun, const Bid& bid) {
  double acc = 0.0;
  for (const auto& [name, weight] : ufun.weights) {
    const auto value = bid.find(name);
    if (value == bid.end())
      throw std::invalid_argument("bid has no value for issue " + name);
    acc += weight * eval_valuation(ufun.valuations.at(name), value->second);
  }
  return acc;
}

}  // namespace mocana
