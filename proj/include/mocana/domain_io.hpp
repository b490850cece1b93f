#pragma once

// File formats. Everything is JSON:
//
//   domain file   {"issues": [...], "profiles": [...]}  (see README for the
//                 full schema; valuation types: linear, triangular, table,
//                 poly)
//   series file   {"series": [[[dim0, dim1, ...], ...offer], ...serie]}
//   tape file     {"actions": [{"type": "propose", "bid": {...}}, ...]}
//
// plus small formatting helpers for human-readable transcripts.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mocana/agent.hpp"
#include "mocana/core.hpp"

namespace mocana {

using nlohmann::json;

struct DomainFile {
  NegotiationDomain domain;
  std::vector<UtilityFunction> profiles;
};

// ---------------------------------------------------------------------------
// JSON -> types

inline Issue issue_from_json(const json& j) {
  Issue issue;
  issue.name = j.at("name").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "integer") {
    issue.kind = IntegerRange{j.at("lo").get<std::int64_t>(),
                              j.at("hi").get<std::int64_t>()};
  } else if (kind == "continuous") {
    issue.kind = ContinuousRange{j.at("lo").get<double>(), j.at("hi").get<double>()};
  } else if (kind == "categorical") {
    issue.kind = Categorical{j.at("categories").get<std::vector<std::string>>()};
  } else {
    throw std::runtime_error("issue " + issue.name + ": unknown kind '" + kind + "'");
  }
  return issue;
}

inline Valuation valuation_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  const json& params = j.at("params");
  if (type == "linear") {
    LinearValuation v;
    v.lo = params.at("lo").get<double>();
    v.hi = params.at("hi").get<double>();
    v.y_lo = params.value("y_lo", 0.0);
    v.y_hi = params.value("y_hi", 1.0);
    return v;
  }
  if (type == "triangular") {
    TriangularValuation v;
    v.a = params.at("a").get<double>();
    v.c = params.at("c").get<double>();
    v.b = params.at("b").get<double>();
    return v;
  }
  if (type == "table") {
    TableValuation v;
    for (const auto& [key, score] : params.at("map").items())
      v.scores[key] = score.get<double>();
    return v;
  }
  if (type == "poly") {
    PolyValuation v;
    v.coeffs = params.at("coeffs").get<std::vector<double>>();
    return v;
  }
  throw std::runtime_error("unknown valuation type '" + type + "'");
}

inline UtilityFunction profile_from_json(const json& j) {
  UtilityFunction ufun;
  for (const auto& [issue, weight] : j.at("weights").items())
    ufun.weights[issue] = weight.get<double>();
  for (const auto& [issue, valuation] : j.at("valuations").items())
    ufun.valuations[issue] = valuation_from_json(valuation);
  ufun.reject_utility = j.value("reject_utility", 0.0);
  ufun.no_agreement_utility = j.value("no_agreement_utility", 0.0);
  return ufun;
}

inline DomainFile domain_file_from_json(const json& j) {
  DomainFile file;
  for (const auto& issue : j.at("issues")) file.domain.issues.push_back(issue_from_json(issue));
  file.domain.validate();
  if (j.contains("profiles"))
    for (const auto& profile : j.at("profiles")) {
      file.profiles.push_back(profile_from_json(profile));
      file.profiles.back().validate(file.domain);
    }
  return file;
}

// ---------------------------------------------------------------------------
// types -> JSON

inline json issue_to_json(const Issue& issue) {
  json j{{"name", issue.name}};
  if (const auto* r = std::get_if<IntegerRange>(&issue.kind)) {
    j["kind"] = "integer";
    j["lo"] = r->lo;
    j["hi"] = r->hi;
  } else if (const auto* c = std::get_if<ContinuousRange>(&issue.kind)) {
    j["kind"] = "continuous";
    j["lo"] = c->lo;
    j["hi"] = c->hi;
  } else {
    j["kind"] = "categorical";
    j["categories"] = std::get<Categorical>(issue.kind).categories;
  }
  return j;
}

inline json valuation_to_json(const Valuation& valuation) {
  if (const auto* lin = std::get_if<LinearValuation>(&valuation))
    return {{"type", "linear"},
            {"params",
             {{"lo", lin->lo}, {"hi", lin->hi}, {"y_lo", lin->y_lo}, {"y_hi", lin->y_hi}}}};
  if (const auto* tri = std::get_if<TriangularValuation>(&valuation))
    return {{"type", "triangular"},
            {"params", {{"a", tri->a}, {"c", tri->c}, {"b", tri->b}}}};
  if (const auto* table = std::get_if<TableValuation>(&valuation)) {
    json map = json::object();
    for (const auto& [key, score] : table->scores) map[key] = score;
    return {{"type", "table"}, {"params", {{"map", map}}}};
  }
  const auto& poly = std::get<PolyValuation>(valuation);
  return {{"type", "poly"}, {"params", {{"coeffs", poly.coeffs}}}};
}

inline json profile_to_json(const UtilityFunction& ufun) {
  json weights = json::object(), valuations = json::object();
  for (const auto& [issue, weight] : ufun.weights) weights[issue] = weight;
  for (const auto& [issue, valuation] : ufun.valuations)
    valuations[issue] = valuation_to_json(valuation);
  return {{"weights", weights},
          {"valuations", valuations},
          {"reject_utility", ufun.reject_utility},
          {"no_agreement_utility", ufun.no_agreement_utility}};
}

inline json domain_file_to_json(const DomainFile& file) {
  json issues = json::array(), profiles = json::array();
  for (const auto& issue : file.domain.issues) issues.push_back(issue_to_json(issue));
  for (const auto& profile : file.profiles) profiles.push_back(profile_to_json(profile));
  return {{"issues", issues}, {"profiles", profiles}};
}

// ---------------------------------------------------------------------------
// Files

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline DomainFile load_domain_file(const std::string& path) {
  try {
    return domain_file_from_json(load_json_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_domain_file(const std::string& path, const DomainFile& file) {
  save_json_file(path, domain_file_to_json(file));
}

// Offer series for the kernel benchmark: series -> offers -> dimensions.
inline std::vector<std::vector<std::vector<double>>> load_series_file(
    const std::string& path) {
  try {
    return load_json_file(path)
        .at("series")
        .get<std::vector<std::vector<std::vector<double>>>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_series_file(const std::string& path,
                             const std::vector<std::vector<std::vector<double>>>& series) {
  save_json_file(path, json{{"series", series}});
}

// ---------------------------------------------------------------------------
// Bids and scripted tapes

inline IssueValue issue_value_from_json(const Issue& issue, const json& j) {
  if (issue.is_integer()) {
    if (!j.is_number_integer())
      throw std::runtime_error("issue " + issue.name + ": expected an integer");
    return j.get<std::int64_t>();
  }
  if (issue.is_continuous()) {
    if (!j.is_number())
      throw std::runtime_error("issue " + issue.name + ": expected a number");
    return j.get<double>();
  }
  if (!j.is_string())
    throw std::runtime_error("issue " + issue.name + ": expected a category string");
  return j.get<std::string>();
}

inline Bid bid_from_json(const NegotiationDomain& domain, const json& j) {
  Bid bid;
  for (const auto& issue : domain.issues) {
    if (!j.contains(issue.name))
      throw std::runtime_error("bid is missing issue " + issue.name);
    bid[issue.name] = issue_value_from_json(issue, j.at(issue.name));
  }
  return bid;
}

inline json bid_to_json(const Bid& bid) {
  json j = json::object();
  for (const auto& [issue, value] : bid) {
    if (const auto* i = std::get_if<std::int64_t>(&value))
      j[issue] = *i;
    else if (const auto* d = std::get_if<double>(&value))
      j[issue] = *d;
    else
      j[issue] = std::get<std::string>(value);
  }
  return j;
}

inline std::vector<AgentAction> load_tape(const std::string& path,
                                          const NegotiationDomain& domain) {
  std::vector<AgentAction> tape;
  const json doc = load_json_file(path);  // named: the loop must outlive it
  try {
    for (const auto& action : doc.at("actions")) {
      const std::string type = action.at("type").get<std::string>();
      if (type == "propose")
        tape.push_back(AgentAction::propose(bid_from_json(domain, action.at("bid"))));
      else if (type == "accept")
        tape.push_back(AgentAction::accept());
      else if (type == "reject")
        tape.push_back(AgentAction::reject());
      else
        throw std::runtime_error("unknown action type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return tape;
}

// ---------------------------------------------------------------------------
// Transcript formatting

inline std::string format_value(const IssueValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *d);
    return buf;
  }
  return std::get<std::string>(value);
}

inline std::string format_bid(const Bid& bid) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (const auto& [issue, value] : bid) {
    if (!first) out << ", ";
    first = false;
    out << issue << '=' << format_value(value);
  }
  out << '}';
  return out.str();
}

inline std::string format_message(const Message& message) {
  switch (message.performative) {
    case Performative::Propose: return "propose " + format_bid(*message.bid);
    case Performative::Accept: return "accept";
    case Performative::Reject: return "reject";
  }
  return "?";
}

}  // namespace mocana
