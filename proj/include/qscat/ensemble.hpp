#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "qscat/kinematics.hpp"
#include "qscat/oracle.hpp"
#include "qscat/rng.hpp"

namespace qscat {

/// Raised when a scenario admits no scattering branch at all.
class empty_branch_set_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when oracle weighting collapses onto at most one branch (the
/// remaining branches sit on oracle zeros).
class degenerate_weights_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WeightMode { uniform, oracle_weighted, table };

/// Full description of one ensemble run. Identical configs give bit-identical
/// results regardless of how shards are scheduled.
struct SimConfig {
  Scenario scenario;
  Beam beam = Beam::from_characteristic_length(1.0);
  std::uint64_t n_particles = 1;
  WeightMode weight_mode = WeightMode::uniform;
  std::vector<double> table_weights;  // used by WeightMode::table only
  std::uint64_t seed = 0;
  double screen_distance = 1.0;  // L
  std::uint32_t bins = 201;
  std::optional<std::pair<double, double>> bin_range;  // default derived from branches
  std::uint32_t shards = 1;
  bool boundary_inclusive = false;
  int lattice_planes = 50;  // oracle parameter for Laue weighting
};

/// One particle arrival: which branch it took and where it landed on the
/// flat screen at distance L (screen_x = L * tan(theta)).
struct ScatteringEvent {
  std::size_t branch_index;
  double theta;
  double screen_x;
};

struct PatternHistogram {
  std::vector<double> bin_edges;  // bins + 1 entries, uniform
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow_low = 0;
  std::uint64_t overflow_high = 0;
  std::uint64_t total = 0;
};

struct SimResult {
  std::vector<ScatteringBranch> branches;
  std::vector<double> weights;  // normalized branch probabilities
  PatternHistogram histogram;
  std::vector<std::uint64_t> branch_counts;
};

/// Normalized branch probabilities for the configured weight mode.
inline std::vector<double> branch_weights(const SimConfig& config,
                                          const std::vector<ScatteringBranch>& branches) {
  if (branches.empty()) throw empty_branch_set_error("scenario admits no scattering branch");
  const std::size_t k = branches.size();
  std::vector<double> w(k, 0.0);
  switch (config.weight_mode) {
    case WeightMode::uniform: {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(k));
      return w;
    }
    case WeightMode::oracle_weighted: {
      const auto profile =
          oracle_profile(config.scenario, config.beam, config.lattice_planes);
      double w_max = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        w[i] = intensity(profile, branches[i].sin_theta);
        w_max = std::max(w_max, w[i]);
      }
      if (!(w_max > 0.0))
        throw degenerate_weights_error(
            "every branch sits on an oracle zero; use uniform or table weights");
      std::size_t nonzero = 0;
      for (double v : w) nonzero += v > 1e-12 * w_max ? 1 : 0;
      if (nonzero <= 1 && k > 1)
        throw degenerate_weights_error(
            "oracle weights collapse onto a single branch (all other branches sit on "
            "oracle zeros); use uniform or table weights");
      break;
    }
    case WeightMode::table: {
      if (config.table_weights.size() != k)
        throw std::invalid_argument("table weights length must equal branch count");
      for (double v : config.table_weights)
        if (!(v >= 0.0)) throw std::invalid_argument("table weights must be nonnegative");
      w = config.table_weights;
      break;
    }
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  if (!(sum > 0.0)) throw std::invalid_argument("weights must not all be zero");
  for (double& v : w) v /= sum;
  return w;
}

/// Inclusive prefix sums with the final entry pinned to 1.
inline std::vector<double> cumulative_weights(const std::vector<double>& weights) {
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = 1.0;
  return cdf;
}

/// Inverse-CDF lookup: the first index whose cumulative weight exceeds u.
inline std::size_t sample_branch_index(double u, const std::vector<double>& cdf) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto idx = static_cast<std::size_t>(it - cdf.begin());
  return std::min(idx, cdf.size() - 1);
}

/// Scatters one particle: a single uniform variate picks the branch, the
/// screen coordinate follows from the branch angle alone.
inline ScatteringEvent sample_event(double u, const std::vector<double>& cdf,
                                    const std::vector<ScatteringBranch>& branches,
                                    double screen_distance) {
  const std::size_t idx = sample_branch_index(u, cdf);
  const double theta = branches[idx].theta;
  return {idx, theta, screen_distance * std::tan(theta)};
}

namespace detail {

inline std::pair<double, double> default_bin_range(const std::vector<ScatteringBranch>& branches,
                                                   double screen_distance) {
  double s_max = 0.0;
  for (const auto& b : branches)
    if (std::abs(b.sin_theta) < 1.0) s_max = std::max(s_max, std::abs(b.sin_theta));
  double x = 1.1 * screen_distance * std::tan(std::asin(s_max));
  if (!(x > 0.0)) x = screen_distance;  // only forward or grazing branches
  return {-x, x};
}

struct ShardTally {
  std::vector<std::uint64_t> bin_counts;
  std::vector<std::uint64_t> branch_counts;
  std::uint64_t overflow_low = 0;
  std::uint64_t overflow_high = 0;
};

}  // namespace detail

/// Runs the ensemble. Particle i draws variate counter_u01(seed, i), so the
/// outcome depends only on (seed, n_particles, weights); shards merely
/// partition i round-robin and may execute concurrently. Histograms merge by
/// addition, making the result independent of scheduling. An event callback
/// forces serial execution but never changes the tallies.
inline SimResult run(const SimConfig& config,
                     const std::function<void(const ScatteringEvent&)>& on_event = {}) {
  if (config.n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (!(config.screen_distance > 0.0))
    throw std::invalid_argument("screen distance must be positive");
  if (config.bins < 2) throw std::invalid_argument("bins must be >= 2");
  if (config.shards < 1) throw std::invalid_argument("shards must be >= 1");

  SimResult result;
  result.branches = quantized_angles(config.scenario, config.beam, config.boundary_inclusive);
  if (result.branches.empty())
    throw empty_branch_set_error(
        "scenario admits no scattering branch (characteristic length too large)");
  result.weights = branch_weights(config, result.branches);
  const auto cdf = cumulative_weights(result.weights);

  const auto [x_min, x_max] = config.bin_range.has_value()
                                  ? *config.bin_range
                                  : detail::default_bin_range(result.branches,
                                                              config.screen_distance);
  if (!(x_min < x_max)) throw std::invalid_argument("bin range must satisfy x_min < x_max");
  const std::size_t bins = config.bins;
  const double bin_width = (x_max - x_min) / static_cast<double>(bins);

  const std::size_t k = result.branches.size();
  const std::uint64_t n = config.n_particles;
  const std::uint32_t shards = config.shards;

  auto run_shard = [&](std::uint32_t shard, detail::ShardTally& tally) {
    tally.bin_counts.assign(bins, 0);
    tally.branch_counts.assign(k, 0);
    for (std::uint64_t i = shard; i < n; i += shards) {
      const double u = counter_u01(config.seed, i);
      const ScatteringEvent ev = sample_event(u, cdf, result.branches, config.screen_distance);
      ++tally.branch_counts[ev.branch_index];
      if (ev.screen_x < x_min) {
        ++tally.overflow_low;
      } else if (ev.screen_x >= x_max) {
        ++tally.overflow_high;
      } else {
        auto bin = static_cast<std::size_t>((ev.screen_x - x_min) / bin_width);
        ++tally.bin_counts[std::min(bin, bins - 1)];
      }
      if (on_event) on_event(ev);
    }
  };

  std::vector<detail::ShardTally> tallies(shards);
  if (shards == 1 || on_event) {
    for (std::uint32_t s = 0; s < shards; ++s) run_shard(s, tallies[s]);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(shards);
    for (std::uint32_t s = 0; s < shards; ++s)
      workers.emplace_back([&, s] { run_shard(s, tallies[s]); });
    for (auto& t : workers) t.join();
  }

  PatternHistogram hist;
  hist.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    hist.bin_edges[i] = x_min + static_cast<double>(i) * bin_width;
  hist.counts.assign(bins, 0);
  result.branch_counts.assign(k, 0);
  for (const auto& tally : tallies) {
    for (std::size_t i = 0; i < bins; ++i) hist.counts[i] += tally.bin_counts[i];
    for (std::size_t i = 0; i < k; ++i) result.branch_counts[i] += tally.branch_counts[i];
    hist.overflow_low += tally.overflow_low;
    hist.overflow_high += tally.overflow_high;
  }
  hist.total = n;
  result.histogram = std::move(hist);
  return result;
}

/// Sup-norm distance between the empirical branch-frequency CDF and a
/// reference CDF, both over branch indices in sin(theta) order.
inline double histogram_cdf_distance(const std::vector<std::uint64_t>& branch_counts,
                                     const std::vector<double>& reference_weights) {
  if (branch_counts.size() != reference_weights.size())
    throw std::invalid_argument("branch counts and reference weights must align");
  if (branch_counts.empty()) throw std::invalid_argument("empty branch set");
  double total = 0.0;
  for (auto c : branch_counts) total += static_cast<double>(c);
  if (!(total > 0.0)) throw std::invalid_argument("no recorded events");
  double ref_total = 0.0;
  for (double w : reference_weights) ref_total += w;
  if (!(ref_total > 0.0)) throw std::invalid_argument("reference weights must not all be zero");

  double emp = 0.0;
  double ref = 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < branch_counts.size(); ++i) {
    emp += static_cast<double>(branch_counts[i]) / total;
    ref += reference_weights[i] / ref_total;
    sup = std::max(sup, std::abs(emp - ref));
  }
  return sup;
}

}  // namespace qscat
