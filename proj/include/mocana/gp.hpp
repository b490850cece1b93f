#pragma once

// Gaussian-process regression over an opponent's offer stream.
//
// Round indices are the inputs, issue values the outputs; each issue gets an
// independent scalar GP. For training rounds x_1..x_n with targets y and a
// kernel k, the covariance matrix is
//
//     K[i][j] = k(x_i, x_j) + sigma_n^2 * [i == j]
//
// and the predictive distribution at a query round x_* is
//
//     mean      = K_* K^-1 y
//     variance  = K_** - K_* K^-1 K_*^T,   K_** = k(x_*, x_*) = sigma_f^2.
//
// K^-1 terms are solved through a lower-triangular (Cholesky) factor, never
// by explicit inversion; factorization failures escalate a diagonal jitter
// 1e-10 -> 1e-8 -> 1e-6 before giving up.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mocana/rng.hpp"

namespace mocana::gp {

enum class KernelFamily { RBF, RationalQuadratic, Matern, ExpSineSquared };

inline const char* kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::RationalQuadratic: return "rational-quadratic";
    case KernelFamily::Matern: return "matern";
    case KernelFamily::ExpSineSquared: return "exp-sine-squared";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "rbf") return KernelFamily::RBF;
  if (name == "rational-quadratic" || name == "rq")
    return KernelFamily::RationalQuadratic;
  if (name == "matern") return KernelFamily::Matern;
  if (name == "exp-sine-squared" || name == "ess")
    return KernelFamily::ExpSineSquared;
  throw std::invalid_argument("unknown kernel family: " + name);
}

inline const std::vector<KernelFamily>& all_kernel_families() {
  static const std::vector<KernelFamily> families = {
      KernelFamily::RBF, KernelFamily::RationalQuadratic, KernelFamily::Matern,
      KernelFamily::ExpSineSquared};
  return families;
}

struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;   // sigma_n^2, added on the diagonal of K
  double rq_alpha = 1.0;          // RationalQuadratic mixture exponent
  double periodicity = 2.0;       // ExpSineSquared period
  double matern_nu = 1.5;         // 1.5 or 2.5

  void validate() const {
    if (!(length_scale > 0.0)) throw std::invalid_argument("length_scale must be > 0");
    if (!(signal_variance > 0.0))
      throw std::invalid_argument("signal_variance must be > 0");
    if (!(noise_variance >= 0.0))
      throw std::invalid_argument("noise_variance must be >= 0");
    if (family == KernelFamily::RationalQuadratic && !(rq_alpha > 0.0))
      throw std::invalid_argument("rq_alpha must be > 0");
    if (family == KernelFamily::ExpSineSquared && !(periodicity > 0.0))
      throw std::invalid_argument("periodicity must be > 0");
    if (family == KernelFamily::Matern && matern_nu != 1.5 && matern_nu != 2.5)
      throw std::invalid_argument("matern_nu must be 1.5 or 2.5");
  }
};

// k(x1, x2) for the spec's family. Stationary in x1 - x2; the noise term is
// not included here (it lives on the diagonal of K only).
inline double kernel_eval(const KernelSpec& spec, double x1, double x2) {
  const double d = x1 - x2;
  const double ell = spec.length_scale;
  switch (spec.family) {
    case KernelFamily::RBF:
      return spec.signal_variance * std::exp(-d * d / (2.0 * ell * ell));
    case KernelFamily::RationalQuadratic:
      return spec.signal_variance *
             std::pow(1.0 + d * d / (2.0 * spec.rq_alpha * ell * ell),
                      -spec.rq_alpha);
    case KernelFamily::Matern: {
      const double tau = std::abs(d);
      if (spec.matern_nu == 1.5) {
        const double s = std::sqrt(3.0) * tau / ell;
        return spec.signal_variance * (1.0 + s) * std::exp(-s);
      }
      const double s = std::sqrt(5.0) * tau / ell;
      return spec.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    case KernelFamily::ExpSineSquared: {
      constexpr double pi = 3.141592653589793238462643383279502884;
      const double sn = std::sin(pi * std::abs(d) / spec.periodicity);
      return spec.signal_variance * std::exp(-2.0 * sn * sn / (ell * ell));
    }
  }
  return 0.0;
}

// K[i][j] = kernel_eval(spec, xs[i], xs[j]) + sigma_n^2 on the diagonal.
inline Eigen::MatrixXd covariance_matrix(const KernelSpec& spec,
                                         const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("covariance_matrix: empty input");
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.signal_variance + spec.noise_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = kernel_eval(spec, xs[i], xs[j]);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

struct Factorization {
  Eigen::MatrixXd lower;  // L with L L^T = K + jitter I
  double jitter = 0.0;
};

// Cholesky with jitter escalation. Throws std::runtime_error when the matrix
// stays indefinite at the largest jitter.
inline Factorization factor_covariance(const Eigen::MatrixXd& K) {
  static constexpr double kLadder[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (const double jitter : kLadder) {
    Eigen::MatrixXd M = K;
    if (jitter > 0.0)
      M.diagonal().array() += jitter;
    const Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success)
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
  }
  throw std::runtime_error("covariance factorization failed after jitter escalation");
}

// log p(y | xs, spec) = -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log(2 pi).
// Throws when the covariance cannot be factored even with jitter.
inline double log_marginal_likelihood(const std::vector<double>& xs,
                                      const std::vector<double>& ys,
                                      const KernelSpec& spec) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("log_marginal_likelihood: bad input sizes");
  const auto factor = factor_covariance(covariance_matrix(spec, xs));
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), n);
  const auto& L = factor.lower;
  const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(y);
  const Eigen::VectorXd alpha =
      L.transpose().triangularView<Eigen::Upper>().solve(v);
  constexpr double log_two_pi = 1.8378770664093454835606594728112;
  return -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * log_two_pi;
}

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Multi-output GP: one independent scalar GP per output dimension, all
// sharing the same round indices. Immutable once constructed, so it can be
// read from any number of simulation threads.
class GpModel {
 public:
  GpModel(std::vector<double> rounds,
          std::vector<std::vector<double>> targets,
          std::vector<KernelSpec> specs)
      : rounds_(std::move(rounds)) {
    if (rounds_.empty()) throw std::invalid_argument("GpModel: no rounds");
    for (std::size_t i = 1; i < rounds_.size(); ++i)
      if (!(rounds_[i - 1] < rounds_[i]))
        throw std::invalid_argument("GpModel: rounds must be strictly increasing");
    if (targets.empty() || targets.size() != specs.size())
      throw std::invalid_argument("GpModel: targets/specs dimension mismatch");

    const auto n = static_cast<Eigen::Index>(rounds_.size());
    dims_.reserve(targets.size());
    for (std::size_t d = 0; d < targets.size(); ++d) {
      if (targets[d].size() != rounds_.size())
        throw std::invalid_argument("GpModel: target series length mismatch");
      specs[d].validate();
      Dim dim;
      dim.targets = std::move(targets[d]);
      dim.spec = specs[d];
      auto factor = factor_covariance(covariance_matrix(dim.spec, rounds_));
      dim.lower = std::move(factor.lower);
      dim.jitter = factor.jitter;
      const Eigen::Map<const Eigen::VectorXd> y(dim.targets.data(), n);
      const Eigen::VectorXd v =
          dim.lower.triangularView<Eigen::Lower>().solve(y);
      dim.alpha = dim.lower.transpose().triangularView<Eigen::Upper>().solve(v);
      dims_.push_back(std::move(dim));
    }
  }

  std::size_t size() const { return rounds_.size(); }
  std::size_t dims() const { return dims_.size(); }
  const std::vector<double>& rounds() const { return rounds_; }
  const KernelSpec& spec(std::size_t dim) const { return dims_.at(dim).spec; }

  GpPosterior predict_dim(std::size_t dim, double x_star) const {
    const Dim& d = dims_.at(dim);
    const auto n = static_cast<Eigen::Index>(rounds_.size());
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i)
      k_star(i) = kernel_eval(d.spec, x_star, rounds_[i]);
    const double mean = k_star.dot(d.alpha);
    const Eigen::VectorXd v = d.lower.triangularView<Eigen::Lower>().solve(k_star);
    // K_** = k(x_*, x_*) = sigma_f^2; tiny negatives from rounding clamp to 0.
    const double variance = d.spec.signal_variance - v.squaredNorm();
    return {mean, variance > 0.0 ? variance : 0.0};
  }

  std::vector<GpPosterior> predict(double x_star) const {
    std::vector<GpPosterior> out;
    out.reserve(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d)
      out.push_back(predict_dim(d, x_star));
    return out;
  }

  // One draw from the predictive gaussian, independently per dimension.
  std::vector<double> sample(double x_star, Rng& rng) const {
    std::vector<double> out;
    out.reserve(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      const GpPosterior post = predict_dim(d, x_star);
      out.push_back(rng.normal(post.mean, std::sqrt(post.variance)));
    }
    return out;
  }

 private:
  struct Dim {
    std::vector<double> targets;
    KernelSpec spec;
    Eigen::MatrixXd lower;
    Eigen::VectorXd alpha;
    double jitter = 0.0;
  };

  std::vector<double> rounds_;
  std::vector<Dim> dims_;
};

// ---------------------------------------------------------------------------
// Hyperparameter fitting: maximize the log marginal likelihood with
// Nelder-Mead from four fixed starts in log-parameter space, 200 iterations
// each. Box constraints are enforced by clamping plus a quadratic penalty so
// the simplex is pushed back instead of wandering off.

namespace detail {

struct NmResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
};

inline NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                            const std::vector<double>& start, int iterations) {
  const std::size_t n = start.size();
  struct Vertex {
    std::vector<double> x;
    double value;
  };
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({start, f(start)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = start;
    x[i] += 0.5;
    simplex.push_back({x, f(x)});
  }

  const auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
  };

  for (int iter = 0; iter < iterations; ++iter) {
    order();
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {  // centroid of all but the worst
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = centroid[j] + t * (centroid[j] - simplex[n].x[j]);
      return x;
    };

    const auto reflected = blend(1.0);
    const double fr = f(reflected);
    if (fr < simplex[0].value) {
      const auto expanded = blend(2.0);
      const double fe = f(expanded);
      simplex[n] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
      continue;
    }
    if (fr < simplex[n - 1].value) {
      simplex[n] = {reflected, fr};
      continue;
    }
    const auto contracted = blend(-0.5);
    const double fc = f(contracted);
    if (fc < simplex[n].value) {
      simplex[n] = {contracted, fc};
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {  // shrink toward the best vertex
      for (std::size_t j = 0; j < n; ++j)
        simplex[i].x[j] = simplex[0].x[j] + 0.5 * (simplex[i].x[j] - simplex[0].x[j]);
      simplex[i].value = f(simplex[i].x);
    }
  }
  order();
  return {simplex[0].x, simplex[0].value};
}

// Log-space box for each tunable parameter, in the order used by the
// objective vector: length_scale, signal_variance, noise_variance, then the
// family extra (rq_alpha or periodicity).
struct LogBox {
  std::vector<double> lo, hi;
};

inline LogBox parameter_box(KernelFamily family) {
  LogBox box;
  const auto add = [&](double lo, double hi) {
    box.lo.push_back(std::log(lo));
    box.hi.push_back(std::log(hi));
  };
  add(1e-2, 1e5);   // length_scale
  add(1e-10, 1e8);  // signal_variance
  add(1e-9, 1e3);   // noise_variance
  if (family == KernelFamily::RationalQuadratic) add(1e-3, 1e3);
  if (family == KernelFamily::ExpSineSquared) add(1e-2, 1e4);
  return box;
}

inline KernelSpec spec_from_log(KernelFamily family, std::vector<double> theta,
                                const LogBox& box) {
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = std::clamp(theta[i], box.lo[i], box.hi[i]);
  KernelSpec spec;
  spec.family = family;
  spec.length_scale = std::exp(theta[0]);
  spec.signal_variance = std::exp(theta[1]);
  spec.noise_variance = std::exp(theta[2]);
  if (family == KernelFamily::RationalQuadratic) spec.rq_alpha = std::exp(theta[3]);
  if (family == KernelFamily::ExpSineSquared) spec.periodicity = std::exp(theta[3]);
  return spec;
}

}  // namespace detail

struct FitResult {
  KernelSpec spec;
  bool fitted = false;  // false when n < 2 forced the default spec
  double log_marginal = std::numeric_limits<double>::quiet_NaN();
};

inline KernelSpec default_spec(KernelFamily family) {
  KernelSpec spec;
  spec.family = family;
  return spec;  // ell=1, sigma_f^2=1, sigma_n^2=1e-6, alpha=1, p=2, nu=1.5
}

inline FitResult fit_hyperparams(const std::vector<double>& xs,
                                 const std::vector<double>& ys,
                                 KernelFamily family) {
  FitResult result{default_spec(family), false,
                   std::numeric_limits<double>::quiet_NaN()};
  if (xs.size() != ys.size())
    throw std::invalid_argument("fit_hyperparams: size mismatch");
  if (xs.size() < 2) return result;

  const detail::LogBox box = detail::parameter_box(family);
  const auto objective = [&](const std::vector<double>& theta) -> double {
    double penalty = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double below = box.lo[i] - theta[i];
      const double above = theta[i] - box.hi[i];
      if (below > 0.0) penalty += 10.0 * below * below;
      if (above > 0.0) penalty += 10.0 * above * above;
    }
    const KernelSpec spec = detail::spec_from_log(family, theta, box);
    try {
      return -log_marginal_likelihood(xs, ys, spec) + penalty;
    } catch (const std::runtime_error&) {
      return 1e18;  // indefinite even with jitter: reject this vertex
    }
  };

  // Four fixed starts: (length_scale, signal_variance, noise_variance) plus
  // the family extra. The ExpSineSquared starts include long periods so the
  // search can reach the smooth, aperiodic corner of its parameter space.
  static constexpr double kBase[4][3] = {
      {1.0, 1.0, 1e-4}, {5.0, 1.0, 1e-4}, {0.5, 2.0, 1e-2}, {10.0, 10.0, 1e-6}};
  static constexpr double kEssPeriods[4] = {2.0, 20.0, 2.0, 50.0};

  detail::NmResult best;
  for (int s = 0; s < 4; ++s) {
    std::vector<double> start = {std::log(kBase[s][0]), std::log(kBase[s][1]),
                                 std::log(kBase[s][2])};
    if (family == KernelFamily::RationalQuadratic) start.push_back(std::log(1.0));
    if (family == KernelFamily::ExpSineSquared)
      start.push_back(std::log(kEssPeriods[s]));
    const auto run = detail::nelder_mead(objective, start, 200);
    if (run.value < best.value) best = run;
  }

  // Keep whichever of {best search point, default spec} explains the data
  // better; the default also covers the case where every start failed.
  double default_lml = -std::numeric_limits<double>::infinity();
  try {
    default_lml = log_marginal_likelihood(xs, ys, result.spec);
  } catch (const std::runtime_error&) {
  }
  result.fitted = true;
  result.log_marginal = default_lml;
  if (best.value < 1e18) {
    const KernelSpec candidate = detail::spec_from_log(family, best.x, box);
    try {
      const double lml = log_marginal_likelihood(xs, ys, candidate);
      if (lml >= default_lml) {
        result.spec = candidate;
        result.log_marginal = lml;
      }
    } catch (const std::runtime_error&) {
    }
  }
  return result;
}

// Convenience: fit every dimension of a vector series with the same family.
inline GpModel fit_model(const std::vector<double>& rounds,
                         const std::vector<std::vector<double>>& targets,
                         KernelFamily family) {
  std::vector<KernelSpec> specs;
  specs.reserve(targets.size());
  for (const auto& series : targets)
    specs.push_back(fit_hyperparams(rounds, series, family).spec);
  return GpModel(rounds, targets, specs);
}

// Walk-forward benchmark: every offer from the third onward is predicted
// from a model fitted on all offers before it; the result is the mean
// Euclidean distance between predicted and actual offers.
inline double walk_forward_distance(const std::vector<std::vector<double>>& series,
                                    KernelFamily family) {
  if (series.size() < 3)
    throw std::invalid_argument("walk_forward_distance: need at least 3 offers");
  const std::size_t dims = series.front().size();
  if (dims == 0) throw std::invalid_argument("walk_forward_distance: empty offers");
  for (const auto& offer : series)
    if (offer.size() != dims)
      throw std::invalid_argument("walk_forward_distance: ragged series");

  double total = 0.0;
  int count = 0;
  for (std::size_t t = 2; t < series.size(); ++t) {
    std::vector<double> rounds(t);
    for (std::size_t i = 0; i < t; ++i) rounds[i] = static_cast<double>(i + 1);
    std::vector<std::vector<double>> targets(dims, std::vector<double>(t));
    for (std::size_t d = 0; d < dims; ++d)
      for (std::size_t i = 0; i < t; ++i) targets[d][i] = series[i][d];
    const GpModel model = fit_model(rounds, targets, family);
    const auto posterior = model.predict(static_cast<double>(t + 1));
    double sq = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double err = posterior[d].mean - series[t][d];
      sq += err * err;
    }
    total += std::sqrt(sq);
    ++count;
  }
  return total / count;
}

}  // namespace mocana::gp
