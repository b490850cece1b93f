#pragma once

// Batch experiment driver: seeded domain generation, tournaments between
// named agents, CSV/JSON reporting, and the kernel prediction benchmark.

#include <algorithm>
#include <array>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mocana/agents.hpp"
#include "mocana/core.hpp"
#include "mocana/domain_io.hpp"
#include "mocana/gp.hpp"
#include "mocana/rng.hpp"
#include "mocana/session.hpp"

namespace mocana {

// ---------------------------------------------------------------------------
// Domain generation: `issue_count` integer issues on [lo, hi] and two random
// utility profiles. Each profile's per-issue valuation is a piecewise-linear
// curve through 3-5 breakpoints at integer positions with values in [0, 1],
// one of which is forced to 1 — so every profile's best achievable utility
// is exactly 1. Weights are uniform draws normalized to sum 1. Everything is
// keyed by the seed.

inline DomainFile generate_domain(int issue_count, std::uint64_t seed,
                                  std::int64_t lo = 0, std::int64_t hi = 10) {
  if (issue_count < 1)
    throw std::invalid_argument("generate_domain: issue_count must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("generate_domain: need lo < hi");

  Rng rng(derive_seed(seed, 0));
  DomainFile file;
  for (int i = 0; i < issue_count; ++i)
    file.domain.issues.push_back(
        Issue{"issue" + std::to_string(i + 1), IntegerRange{lo, hi}});

  for (int p = 0; p < 2; ++p) {
    UtilityFunction ufun;
    std::vector<double> raw(issue_count);
    double sum = 0.0;
    for (double& w : raw) {
      w = rng.uniform(0.1, 1.0);
      sum += w;
    }
    for (int i = 0; i < issue_count; ++i)
      ufun.weights[file.domain.issues[i].name] = raw[i] / sum;

    for (const auto& issue : file.domain.issues) {
      // Breakpoints: both endpoints plus 1-3 distinct interior integers.
      std::vector<std::int64_t> interior;
      for (std::int64_t v = lo + 1; v < hi; ++v) interior.push_back(v);
      rng.shuffle(interior);
      const auto extra = static_cast<std::size_t>(
          std::min<std::int64_t>(rng.uniform_int(1, 3),
                                 static_cast<std::int64_t>(interior.size())));
      std::vector<std::int64_t> xs = {lo, hi};
      xs.insert(xs.end(), interior.begin(), interior.begin() + extra);
      std::sort(xs.begin(), xs.end());

      std::vector<double> ys(xs.size());
      for (double& y : ys) y = rng.uniform(0.0, 1.0);
      ys[static_cast<std::size_t>(rng.uniform_int(0, xs.size() - 1))] = 1.0;

      TableValuation table;
      for (std::int64_t v = lo; v <= hi; ++v) {
        std::size_t k = 1;
        while (xs[k] < v) ++k;
        const double t = static_cast<double>(v - xs[k - 1]) /
                         static_cast<double>(xs[k] - xs[k - 1]);
        table.scores[std::to_string(v)] = ys[k - 1] + t * (ys[k] - ys[k - 1]);
      }
      ufun.valuations[issue.name] = std::move(table);
    }
    ufun.validate(file.domain);
    file.profiles.push_back(std::move(ufun));
  }
  return file;
}

// ---------------------------------------------------------------------------
// Agent factory. Specs: "mocana", "random-walker", "conceder:<rate>",
// "scripted:<tape file>".

inline std::unique_ptr<Agent> make_agent(const std::string& spec,
                                         const NegotiationDomain& domain,
                                         const UtilityFunction& profile,
                                         const MocanaConfig& mocana_config) {
  if (spec == "mocana")
    return std::make_unique<MocanaAgent>(domain, profile, mocana_config);
  if (spec == "random-walker")
    return std::make_unique<RandomWalkerAgent>(domain, profile);
  if (spec.rfind("conceder:", 0) == 0) {
    std::size_t parsed = 0;
    const std::string arg = spec.substr(9);
    const double rate = std::stod(arg, &parsed);
    if (parsed != arg.size() || !(rate > 0.0))
      throw std::invalid_argument("bad conceder rate in '" + spec + "'");
    return std::make_unique<ConcederAgent>(domain, profile, rate);
  }
  if (spec.rfind("scripted:", 0) == 0)
    return std::make_unique<ScriptedAgent>(load_tape(spec.substr(9), domain));
  throw std::invalid_argument("unknown agent '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Tournament

struct TournamentConfig {
  NegotiationDomain domain;
  std::array<UtilityFunction, 2> profiles;
  std::string agent1 = "mocana";
  std::string agent2 = "random-walker";
  int repetitions = 10;  // sessions per profile ordering; total = 2x this
  SessionConfig session{};
  MocanaConfig mocana{};
  std::uint64_t master_seed = 1;
  int workers = 1;
};

struct SessionRow {
  int session = 0;
  std::uint64_t seed = 0;
  OutcomeKind outcome = OutcomeKind::BoundReached;
  int rounds = 0;
  double u1 = 0.0;
  double u2 = 0.0;
};

struct AgentSummary {
  std::string agent;
  int sessions = 0;
  int agreements = 0;
  double agreement_rate = 0.0;
  // Mean/std of utility over agreed sessions only; absent ("N.A") when
  // nothing was agreed. Std is the population formula.
  std::optional<double> mean_utility;
  std::optional<double> std_utility;
};

struct TournamentReport {
  std::vector<SessionRow> rows;
  std::array<AgentSummary, 2> agents;
};

inline std::array<AgentSummary, 2> aggregate_rows(const std::vector<SessionRow>& rows,
                                                  const std::string& agent1,
                                                  const std::string& agent2) {
  std::array<AgentSummary, 2> agents;
  agents[0].agent = agent1;
  agents[1].agent = agent2;
  for (int seat = 0; seat < 2; ++seat) {
    AgentSummary& s = agents[seat];
    s.sessions = static_cast<int>(rows.size());
    std::vector<double> utilities;
    for (const SessionRow& row : rows) {
      if (row.outcome != OutcomeKind::Agreement) continue;
      utilities.push_back(seat == 0 ? row.u1 : row.u2);
    }
    s.agreements = static_cast<int>(utilities.size());
    s.agreement_rate =
        rows.empty() ? 0.0 : static_cast<double>(s.agreements) / rows.size();
    if (!utilities.empty()) {
      double mean = 0.0;
      for (const double u : utilities) mean += u;
      mean /= utilities.size();
      double var = 0.0;
      for (const double u : utilities) var += (u - mean) * (u - mean);
      var /= utilities.size();
      s.mean_utility = mean;
      s.std_utility = std::sqrt(var);
    }
  }
  return agents;
}

// Runs repetitions x 2 sessions: the first half with the profiles as given,
// the second half with the profiles swapped (agents keep their seats). Each
// session's seed depends only on the master seed and the session index, so
// results are independent of worker scheduling; rows come back ordered by
// session index either way.
inline TournamentReport run_tournament(const TournamentConfig& config) {
  if (config.repetitions < 1)
    throw std::invalid_argument("run_tournament: repetitions must be >= 1");
  if (config.workers < 1)
    throw std::invalid_argument("run_tournament: workers must be >= 1");
  config.profiles[0].validate(config.domain);
  config.profiles[1].validate(config.domain);
  // Configuration problems (unknown agent name, unreadable tape) should
  // fail the tournament up front, not masquerade as session aborts.
  make_agent(config.agent1, config.domain, config.profiles[0], config.mocana);
  make_agent(config.agent2, config.domain, config.profiles[1], config.mocana);

  const int total = config.repetitions * 2;
  std::vector<SessionRow> rows(static_cast<std::size_t>(total));
  std::atomic<int> next{0};

  const auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= total) return;
      const bool swapped = i >= config.repetitions;
      const std::array<UtilityFunction, 2> profiles =
          swapped ? std::array<UtilityFunction, 2>{config.profiles[1],
                                                   config.profiles[0]}
                  : config.profiles;
      const std::uint64_t seed = derive_seed(config.master_seed, i);
      SessionRow row;
      row.session = i;
      row.seed = seed;
      try {
        const auto a1 =
            make_agent(config.agent1, config.domain, profiles[0], config.mocana);
        const auto a2 =
            make_agent(config.agent2, config.domain, profiles[1], config.mocana);
        const SessionOutcome outcome = run_session(
            *a1, *a2, config.domain, profiles, config.session, seed);
        row.outcome = outcome.kind;
        row.rounds = outcome.rounds_used;
        row.u1 = outcome.utilities[0];
        row.u2 = outcome.utilities[1];
      } catch (const std::exception&) {
        // A crashed session is recorded as a violation with reservation
        // payoffs rather than taking the whole tournament down.
        row.outcome = OutcomeKind::ProtocolViolation;
        row.rounds = 0;
        row.u1 = detail::reservation_for(config.session, profiles[0], 0,
                                         OutcomeKind::ProtocolViolation);
        row.u2 = detail::reservation_for(config.session, profiles[1], 1,
                                         OutcomeKind::ProtocolViolation);
      }
      rows[static_cast<std::size_t>(i)] = row;
    }
  };

  std::vector<std::thread> pool;
  for (int w = 1; w < config.workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto agents = aggregate_rows(rows, config.agent1, config.agent2);
  return {std::move(rows), std::move(agents)};
}

// ---------------------------------------------------------------------------
// Reporting

inline const char* outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Agreement: return "agreement";
    case OutcomeKind::Reject: return "reject";
    case OutcomeKind::BoundReached: return "bound-reached";
    case OutcomeKind::ProtocolViolation: return "protocol-violation";
  }
  return "?";
}

inline OutcomeKind parse_outcome(const std::string& name) {
  if (name == "agreement") return OutcomeKind::Agreement;
  if (name == "reject") return OutcomeKind::Reject;
  if (name == "bound-reached") return OutcomeKind::BoundReached;
  if (name == "protocol-violation") return OutcomeKind::ProtocolViolation;
  throw std::invalid_argument("unknown outcome '" + name + "'");
}

// One row per session. Utilities are printed with %.17g so re-parsing the
// CSV recovers the exact doubles and re-aggregation matches the summary
// bit for bit.
inline void write_rows_csv(const std::string& path,
                           const std::vector<SessionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "session,seed,outcome,rounds,u1,u2\n";
  char buf[128];
  for (const SessionRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%d,%" PRIu64 ",%s,%d,%.17g,%.17g\n",
                  row.session, row.seed, outcome_name(row.outcome), row.rounds,
                  row.u1, row.u2);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<SessionRow> read_rows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "session,seed,outcome,rounds,u1,u2")
    throw std::runtime_error(path + ": unexpected CSV header");
  std::vector<SessionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    SessionRow row;
    row.session = std::stoi(fields[0]);
    row.seed = std::strtoull(fields[1].c_str(), nullptr, 10);
    row.outcome = parse_outcome(fields[2]);
    row.rounds = std::stoi(fields[3]);
    row.u1 = std::strtod(fields[4].c_str(), nullptr);
    row.u2 = std::strtod(fields[5].c_str(), nullptr);
    rows.push_back(row);
  }
  return rows;
}

inline json summary_to_json(const std::array<AgentSummary, 2>& agents) {
  json out = json::array();
  for (const AgentSummary& s : agents) {
    json j{{"agent", s.agent},
           {"sessions", s.sessions},
           {"agreements", s.agreements},
           {"agreement_rate", s.agreement_rate}};
    if (s.mean_utility) {
      j["mean_utility"] = *s.mean_utility;
      j["std_utility"] = *s.std_utility;
    } else {
      j["mean_utility"] = "N.A";
      j["std_utility"] = "N.A";
    }
    out.push_back(std::move(j));
  }
  return json{{"agents", out}};
}

inline std::string format_summary(const std::array<AgentSummary, 2>& agents) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %14s %12s %14s\n", "agent",
                "mean utility", "std", "agreement rate");
  out << buf;
  for (const AgentSummary& s : agents) {
    std::string mean = "N.A", std_dev = "N.A";
    if (s.mean_utility) {
      std::snprintf(buf, sizeof buf, "%.3f", *s.mean_utility);
      mean = buf;
      std::snprintf(buf, sizeof buf, "%.3f", *s.std_utility);
      std_dev = buf;
    }
    std::snprintf(buf, sizeof buf, "%-24s %14s %12s %11d/%-3d\n", s.agent.c_str(),
                  mean.c_str(), std_dev.c_str(), s.agreements, s.sessions);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Kernel benchmark: mean walk-forward distance per kernel family over a set
// of offer series, next to the trivial repeat-last-offer baseline.

// Baseline predictor over the same walk-forward span: predict each offer
// (from the 3rd on) as a copy of the one before it.
inline double repeat_last_distance(const std::vector<std::vector<double>>& series) {
  if (series.size() < 3)
    throw std::invalid_argument("repeat_last_distance: need at least 3 offers");
  double total = 0.0;
  int count = 0;
  for (std::size_t t = 2; t < series.size(); ++t) {
    double sq = 0.0;
    for (std::size_t d = 0; d < series[t].size(); ++d) {
      const double err = series[t][d] - series[t - 1][d];
      sq += err * err;
    }
    total += std::sqrt(sq);
    ++count;
  }
  return total / count;
}

struct KernelBenchmark {
  struct Entry {
    gp::KernelFamily family;
    double mean_distance = 0.0;
  };
  std::vector<Entry> entries;
  double baseline = 0.0;
  int series_count = 0;
};

inline KernelBenchmark kernel_benchmark(
    const std::vector<std::vector<std::vector<double>>>& series_list,
    const std::vector<gp::KernelFamily>& families) {
  if (series_list.empty())
    throw std::invalid_argument("kernel_benchmark: no series");
  KernelBenchmark bench;
  bench.series_count = static_cast<int>(series_list.size());
  for (const auto& series : series_list) bench.baseline += repeat_last_distance(series);
  bench.baseline /= series_list.size();
  for (const gp::KernelFamily family : families) {
    double total = 0.0;
    for (const auto& series : series_list)
      total += gp::walk_forward_distance(series, family);
    bench.entries.push_back({family, total / series_list.size()});
  }
  return bench;
}

// Synthetic concession series: per dimension, offers start high and decay
// linearly with a little Gaussian noise, floored at zero — the shape the
// strategy model is meant to extrapolate.
inline std::vector<std::vector<std::vector<double>>> synthetic_concession_series(
    int count, int length, int dims, std::uint64_t seed) {
  if (count < 1 || length < 3 || dims < 1)
    throw std::invalid_argument("synthetic_concession_series: bad shape");
  std::vector<std::vector<std::vector<double>>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    std::vector<double> start(dims), slope(dims);
    for (int d = 0; d < dims; ++d) {
      start[d] = rng.uniform(7.5, 9.5);
      slope[d] = rng.uniform(0.3, 0.7);
    }
    std::vector<std::vector<double>> series(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
      auto& offer = series[static_cast<std::size_t>(t)];
      offer.resize(static_cast<std::size_t>(dims));
      for (int d = 0; d < dims; ++d)
        offer[d] = std::max(0.0, start[d] - slope[d] * t + rng.normal(0.0, 0.08));
    }
    out.push_back(std::move(series));
  }
  return out;
}

inline std::string format_benchmark(const KernelBenchmark& bench) {
  std::ostringstream out;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-22s %16s\n", "kernel", "mean distance");
  out << buf;
  for (const auto& entry : bench.entries) {
    std::snprintf(buf, sizeof buf, "%-22s %16.4f\n",
                  gp::kernel_family_name(entry.family), entry.mean_distance);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-22s %16.4f\n", "repeat-last baseline",
                bench.baseline);
  out << buf;
  std::snprintf(buf, sizeof buf, "(%d series)\n", bench.series_count);
  out << buf;
  return out.str();
}

}  // namespace mocana
