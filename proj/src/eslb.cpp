// Copyright 2026 The ope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <ope/eslb.hpp>
#include <ope/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ope {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum Purpose : std::uint64_t { kTail = 0, kShare = 1, kBias = 2 };

/// num / den for normalized weights; 0/0 is 0 and a positive weight over an empty sum saturates at 1.
double normalized_ratio(double numerator, double denominator) {
  if (denominator > 0.0) {
    return numerator / denominator;
  }
  return numerator > 0.0 ? 1.0 : 0.0;
}

void check_inputs(const PolicyTable& target, const PolicyTable& behavior, const WeightVector& weights) {
  if (target.rows() != behavior.rows() || target.num_actions() != behavior.num_actions()) {
    throw std::invalid_argument("eslb: target and behavior tables differ in shape");
  }
  if (weights.size() != target.rows()) {
    throw std::invalid_argument("eslb: weight vector does not match the tables");
  }
  if (target.rows() == 0) {
    throw std::invalid_argument("eslb: empty sample");
  }
  if (!behavior.has_full_support()) {
    throw SupportViolation("eslb: behavior policy must have full support");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("eslb: weights must be finite and non-negative");
  }
}

RowMatrix weight_table(const PolicyTable& target, const PolicyTable& behavior) {
  return (target.probs().array() / behavior.probs().array()).matrix();
}

/// Welford running mean and sum of squared deviations.
struct RunningMoments {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  bool infinite = false;

  void push(double value) {
    ++count;
    if (std::isinf(value)) {
      infinite = true;
      return;
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (value - mean);
  }

  [[nodiscard]] double value() const { return infinite ? kInfinity : mean; }

  [[nodiscard]] double sample_variance() const {
    if (infinite) {
      return kInfinity;
    }
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }

  [[nodiscard]] double standard_error() const {
    return count > 0 ? std::sqrt(sample_variance() / static_cast<double>(count)) : kInfinity;
  }
};

struct IterationSample {
  double v = 0.0;
  double u = 0.0;
  double z = 0.0;
};

/// Draws simulated weight tuples and evaluates one iteration of the estimator.
class Simulator {
 public:
  Simulator(const PolicyTable& target, const PolicyTable& behavior, const WeightVector& observed, std::uint64_t seed,
            int batch)
      : n_(target.rows()),
        k_(target.num_actions()),
        cumulative_(behavior.rows(), behavior.num_actions()),
        weights_(weight_table(target, behavior)),
        observed_(observed),
        prefix_(observed.size()),
        seed_(seed),
        batch_(batch) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      double running = 0.0;
      for (int a = 0; a < k_; ++a) {
        running += behavior.probs()(i, a);
        cumulative_(i, a) = running;
      }
    }
    double running = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      running += observed_[i];
      prefix_[i] = running;
    }
  }

  [[nodiscard]] Eigen::Index size() const noexcept { return n_; }

  struct Scratch {
    Eigen::VectorXd tail;
    Eigen::VectorXd share;
    Eigen::VectorXd bias;
    Eigen::VectorXd suffix;
  };

  [[nodiscard]] Scratch make_scratch() const {
    return Scratch{Eigen::VectorXd(n_), Eigen::VectorXd(n_), Eigen::VectorXd(n_), Eigen::VectorXd(n_ + 1)};
  }

  /// Batch-averaged sample of iteration t (1-based); per-slot V and U contributions are added
  /// to the accumulators.
  IterationSample iteration(std::int64_t t, Scratch& scratch, Eigen::VectorXd& v_acc, Eigen::VectorXd& u_acc) const {
    IterationSample sample;
    const double inv_batch = 1.0 / static_cast<double>(batch_);
    for (int b = 0; b < batch_; ++b) {
      const auto step = static_cast<std::uint64_t>(t);
      const auto draw_index = static_cast<std::uint64_t>(b);
      draw(CounterStream(derive_seed(seed_, {step, draw_index, kTail})), scratch.tail);
      draw(CounterStream(derive_seed(seed_, {step, draw_index, kShare})), scratch.share);
      draw(CounterStream(derive_seed(seed_, {step, draw_index, kBias})), scratch.bias);

      // suffix[k] = sum_{j >= k} W'_j
      scratch.suffix[n_] = 0.0;
      for (Eigen::Index j = n_ - 1; j >= 0; --j) {
        scratch.suffix[j] = scratch.tail[j] + scratch.suffix[j + 1];
      }

      double v = 0.0;
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double z = prefix_[k] + scratch.suffix[k + 1];
        const double z_replaced = z - observed_[k] + scratch.tail[k];
        const double term = normalized_ratio(observed_[k], z) + normalized_ratio(scratch.tail[k], z_replaced);
        const double squared = term * term;
        v += squared;
        v_acc[k] += squared * inv_batch;
      }

      const double share_total = scratch.share.sum();
      double u = 0.0;
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double share = normalized_ratio(scratch.share[k], share_total);
        const double squared = share_total > 0.0 ? share * share : 0.0;
        u += squared;
        u_acc[k] += squared * inv_batch;
      }

      const double bias_total = scratch.bias.sum();
      const double leave_one_out_min = bias_total - scratch.bias.maxCoeff();
      const double z_sample = leave_one_out_min > 0.0 ? 1.0 / leave_one_out_min : kInfinity;

      sample.v += v * inv_batch;
      sample.u += u * inv_batch;
      sample.z += z_sample * inv_batch;
    }
    return sample;
  }

 private:
  void draw(const CounterStream& stream, Eigen::VectorXd& out) const {
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double u = stream.uniform(static_cast<std::uint64_t>(i));
      int a = 0;
      while (a < k_ - 1 && !(u < cumulative_(i, a))) {
        ++a;
      }
      out[i] = weights_(i, a);
    }
  }

  Eigen::Index n_;
  int k_;
  RowMatrix cumulative_;
  RowMatrix weights_;
  Eigen::VectorXd observed_;
  Eigen::VectorXd prefix_;
  std::uint64_t seed_;
  int batch_;
};

/// Running state of the simulation. Iterations are processed in blocks whose boundaries depend
/// only on the schedule, and block results are merged in block order, so the state after any
/// number of iterations does not depend on how many workers computed the blocks.
class MCState {
 public:
  MCState(const Simulator& simulator, int workers)
      : simulator_(simulator),
        workers_(std::max(1, workers)),
        v_sum_(Eigen::VectorXd::Zero(simulator.size())),
        u_sum_(Eigen::VectorXd::Zero(simulator.size())) {}

  [[nodiscard]] std::int64_t iterations() const noexcept { return v_.count; }
  [[nodiscard]] const RunningMoments& v() const noexcept { return v_; }
  [[nodiscard]] const RunningMoments& u() const noexcept { return u_; }
  [[nodiscard]] const RunningMoments& z() const noexcept { return z_; }

  /// Runs iterations (t_done, t_end].
  void advance_to(std::int64_t t_end) {
    const std::int64_t begin = iterations() + 1;
    if (t_end < begin) {
      return;
    }
    const std::int64_t length = t_end - begin + 1;
    const std::int64_t block_count = std::min<std::int64_t>(kMaxBlocks, length);
    struct Block {
      std::int64_t first = 0;
      std::int64_t last = 0;
      std::vector<IterationSample> samples;
      Eigen::VectorXd v_acc;
      Eigen::VectorXd u_acc;
    };
    std::vector<Block> blocks(static_cast<std::size_t>(block_count));
    for (std::int64_t b = 0; b < block_count; ++b) {
      auto& block = blocks[static_cast<std::size_t>(b)];
      block.first = begin + (length * b) / block_count;
      block.last = begin + (length * (b + 1)) / block_count - 1;
    }

    auto run_blocks = [&](int worker) {
      auto scratch = simulator_.make_scratch();
      for (auto b = static_cast<std::size_t>(worker); b < blocks.size(); b += static_cast<std::size_t>(workers_)) {
        auto& block = blocks[b];
        block.v_acc = Eigen::VectorXd::Zero(simulator_.size());
        block.u_acc = Eigen::VectorXd::Zero(simulator_.size());
        block.samples.reserve(static_cast<std::size_t>(block.last - block.first + 1));
        for (std::int64_t t = block.first; t <= block.last; ++t) {
          block.samples.push_back(simulator_.iteration(t, scratch, block.v_acc, block.u_acc));
        }
      }
    };

    const int active = static_cast<int>(std::min<std::int64_t>(workers_, block_count));
    if (active <= 1) {
      run_blocks(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(active));
      for (int w = 0; w < active; ++w) {
        threads.emplace_back([&run_blocks, w] { run_blocks(w); });
      }
      for (auto& thread : threads) {
        thread.join();
      }
    }

    for (const auto& block : blocks) {
      v_sum_ += block.v_acc;
      u_sum_ += block.u_acc;
      for (const auto& sample : block.samples) {
        v_.push(sample.v);
        u_.push(sample.u);
        z_.push(sample.z);
      }
    }
  }

  [[nodiscard]] VarianceProxies proxies() const {
    VarianceProxies out;
    const auto t = static_cast<double>(iterations());
    out.iterations = iterations();
    out.per_index_V = v_sum_ / t;
    out.per_index_U = u_sum_ / t;
    out.V = out.per_index_V.sum();
    out.U = out.per_index_U.sum();
    out.z_inv = z_.value();
    out.B = std::min(1.0, 1.0 / (static_cast<double>(simulator_.size()) * out.z_inv));
    out.V_stderr = v_.standard_error();
    out.U_stderr = u_.standard_error();
    out.z_inv_stderr = z_.standard_error();
    return out;
  }

 private:
  static constexpr std::int64_t kMaxBlocks = 64;

  const Simulator& simulator_;
  int workers_;
  RunningMoments v_;
  RunningMoments u_;
  RunningMoments z_;
  Eigen::VectorXd v_sum_;
  Eigen::VectorXd u_sum_;
};

}  // namespace

bool convergence_check(double sample_variance, std::int64_t t, double x, double range, double eps) {
  if (t < 2) {
    throw std::invalid_argument("convergence_check: at least two iterations are required");
  }
  if (!(eps > 0.0) || !(range > 0.0)) {
    throw std::invalid_argument("convergence_check: eps and range must be positive");
  }
  const auto steps = static_cast<double>(t);
  const double radius = std::sqrt(2.0 * sample_variance / steps) + (7.0 / 3.0) * range * x / (steps - 1.0);
  return radius <= eps;
}

double z_inv_range(const PolicyTable& target, const PolicyTable& behavior) {
  const double total = (target.probs().array() / behavior.probs().array()).rowwise().minCoeff().sum();
  return total > 0.0 ? 1.0 / total : kInfinity;
}

VarianceProxies mc_estimate_proxies(
    const PolicyTable& target, const PolicyTable& behavior, const WeightVector& weights, const MCOptions& options) {
  check_inputs(target, behavior, weights);
  const auto n = target.rows();

  if (const auto* fixed = std::get_if<FixedSchedule>(&options.schedule)) {
    if (fixed->iterations < 1 || fixed->batch < 1) {
      throw std::invalid_argument("mc_estimate_proxies: iterations and batch must be positive");
    }
    const Simulator simulator(target, behavior, weights, options.seed, fixed->batch);
    MCState state(simulator, options.workers);
    state.advance_to(fixed->iterations);
    return state.proxies();
  }

  const auto& adaptive = std::get<AdaptiveSchedule>(options.schedule);
  const double eps = adaptive.eps > 0.0 ? adaptive.eps : 1.0 / static_cast<double>(n);
  if (!(adaptive.x > 0.0) || adaptive.batch < 1 || adaptive.max_iterations < 2) {
    throw std::invalid_argument("mc_estimate_proxies: adaptive schedule needs x > 0, batch >= 1, max_iterations >= 2");
  }
  const double z_range = z_inv_range(target, behavior);
  // One sample leaves every leave-one-out sum empty, so z_inv is +inf on every draw.
  const bool z_exact = n == 1;
  const Simulator simulator(target, behavior, weights, options.seed, adaptive.batch);
  MCState state(simulator, options.workers);

  int checks = 0;
  bool converged = false;
  std::int64_t checkpoint = 2;
  while (true) {
    const std::int64_t t = std::min(checkpoint, adaptive.max_iterations);
    state.advance_to(t);
    ++checks;
    converged = convergence_check(state.v().sample_variance(), t, adaptive.x, 2.0, eps) &&
                convergence_check(state.u().sample_variance(), t, adaptive.x, 2.0, eps) &&
                (z_exact || (std::isfinite(z_range) && std::isfinite(state.z().sample_variance()) &&
                             convergence_check(state.z().sample_variance(), t, adaptive.x, z_range, eps)));
    if (converged || t >= adaptive.max_iterations) {
      break;
    }
    checkpoint *= 2;
  }

  auto proxies = state.proxies();
  proxies.converged = converged;
  proxies.checks = checks;
  proxies.mc_error_budget = eps;
  return proxies;
}

BoundReport eslb_bound(const VarianceProxies& proxies, double v_hat_sn, Eigen::Index n, double x) {
  if (x < 2.0) {
    throw std::invalid_argument("eslb_bound: the exponent x must be at least 2");
  }
  if (n < 1) {
    throw std::invalid_argument("eslb_bound: n must be positive");
  }
  double v = proxies.V;
  double u = proxies.U;
  double bias = proxies.B;
  const double budget = proxies.mc_error_budget;
  if (budget > 0.0) {
    v += budget;
    u += budget;
    bias = std::min(1.0, 1.0 / (static_cast<double>(n) * (proxies.z_inv + budget)));
  }
  if (!(u > 0.0) || !(v >= 0.0)) {
    throw std::invalid_argument("eslb_bound: invalid proxies (need V >= 0 and U > 0)");
  }
  if (!(bias >= 0.0 && bias <= 1.0)) {
    throw std::invalid_argument("eslb_bound: multiplicative bias outside [0, 1]");
  }

  BoundReport report;
  report.method = "ESLB";
  report.point_estimate = v_hat_sn;
  report.concentration = std::sqrt(2.0 * (v + u) * (x + 0.5 * std::log1p(v / u)));
  report.bias = bias;
  report.bias_kind = BiasKind::kMultiplicative;
  report.context_term = hoeffding_context_term(n, x);
  report.lower_bound =
      std::max(0.0, bias * std::max(0.0, v_hat_sn - report.concentration) - report.context_term);
  report.x = x;
  report.iterations = proxies.iterations;
  report.diagnostics = {
      {"V", v},
      {"U", u},
      {"z_inv", proxies.z_inv},
      {"V_stderr", proxies.V_stderr},
      {"U_stderr", proxies.U_stderr},
      {"z_inv_stderr", proxies.z_inv_stderr},
      {"mc_error_budget", budget},
      {"converged", proxies.converged ? 1.0 : 0.0},
      {"convergence_checks", static_cast<double>(proxies.checks)},
  };
  return report;
}

BoundReport eslb(
    const PolicyTable& target,
    const PolicyTable& behavior,
    std::span<const int> actions,
    const Eigen::VectorXd& rewards,
    const ConfidenceSpec& confidence,
    const MCOptions& options) {
  const auto weights = importance_weights(target, behavior, actions);
  const double v_hat = wis_estimate(weights, rewards);
  MCOptions resolved = options;
  if (auto* adaptive = std::get_if<AdaptiveSchedule>(&resolved.schedule); adaptive != nullptr && adaptive->x <= 0.0) {
    adaptive->x = confidence.x;
  }
  const auto proxies = mc_estimate_proxies(target, behavior, weights, resolved);
  auto report = eslb_bound(proxies, v_hat, target.rows(), confidence.x);
  report.delta = confidence.delta;
  report.diagnostics["n_eff"] = weights.sum() > 0.0 ? effective_sample_size(weights) : 0.0;
  double failure = 2.0 * std::exp(-confidence.x);
  if (const auto* adaptive = std::get_if<AdaptiveSchedule>(&resolved.schedule)) {
    failure += 3.0 * static_cast<double>(proxies.checks) * std::exp(-adaptive->x);
  }
  report.diagnostics["failure_probability"] = std::min(1.0, failure);
  return report;
}

namespace {

void guard_enumeration(Eigen::Index n, int k) {
  if (static_cast<double>(n) * std::log(static_cast<double>(k)) > std::log(kMaxEnumeration) + 1e-9) {
    throw std::invalid_argument("enumeration: K^n exceeds the enumeration limit");
  }
}

/// Calls visit(actions, probability) for every assignment of 0-based actions to `slots`.
template <typename Visit>
void for_each_assignment(const RowMatrix& behavior, const std::vector<Eigen::Index>& slots, Visit&& visit) {
  const int k = static_cast<int>(behavior.cols());
  std::vector<int> actions(slots.size(), 0);
  while (true) {
    double probability = 1.0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      probability *= behavior(slots[s], actions[s]);
    }
    visit(actions, probability);
    std::size_t position = 0;
    while (position < actions.size() && ++actions[position] == k) {
      actions[position] = 0;
      ++position;
    }
    if (position == actions.size()) {
      return;
    }
  }
}

std::vector<Eigen::Index> slot_range(Eigen::Index first, Eigen::Index last_exclusive) {
  std::vector<Eigen::Index> slots;
  for (Eigen::Index i = first; i < last_exclusive; ++i) {
    slots.push_back(i);
  }
  return slots;
}

}  // namespace

VarianceProxies exact_proxies_enumeration(
    const PolicyTable& target, const PolicyTable& behavior, const WeightVector& weights) {
  check_inputs(target, behavior, weights);
  const auto n = target.rows();
  const int k = target.num_actions();
  guard_enumeration(n, k);
  const RowMatrix table = weight_table(target, behavior);
  const RowMatrix probs = behavior.probs();

  VarianceProxies out;
  out.per_index_V = Eigen::VectorXd::Zero(n);
  out.per_index_U = Eigen::VectorXd::Zero(n);

  // V: slot k keeps the observed W_1..W_k, the tail j > k is simulated, and one draw at slot k
  // is both the replacement numerator and the replaced weight in its denominator.
  double prefix = 0.0;
  for (Eigen::Index slot = 0; slot < n; ++slot) {
    prefix += weights[slot];
    double expectation = 0.0;
    for_each_assignment(probs, slot_range(slot + 1, n), [&](const std::vector<int>& tail, double p_tail) {
      double tail_sum = 0.0;
      for (std::size_t s = 0; s < tail.size(); ++s) {
        tail_sum += table(slot + 1 + static_cast<Eigen::Index>(s), tail[s]);
      }
      const double z = prefix + tail_sum;
      for (int replaced = 0; replaced < k; ++replaced) {
        const double z_replaced = z - weights[slot] + table(slot, replaced);
        const double term =
            normalized_ratio(weights[slot], z) + normalized_ratio(table(slot, replaced), z_replaced);
        expectation += p_tail * probs(slot, replaced) * term * term;
      }
    });
    out.per_index_V[slot] = expectation;
  }

  double z_inv = 0.0;
  for_each_assignment(probs, slot_range(0, n), [&](const std::vector<int>& actions, double p) {
    double total = 0.0;
    double largest = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = table(i, actions[static_cast<std::size_t>(i)]);
      total += w;
      largest = std::max(largest, w);
    }
    if (total > 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double share = table(i, actions[static_cast<std::size_t>(i)]) / total;
        out.per_index_U[i] += p * share * share;
      }
    }
    if (p > 0.0) {
      const double leave_one_out_min = total - largest;
      z_inv += leave_one_out_min > 0.0 ? p / leave_one_out_min : kInfinity;
    }
  });

  out.V = out.per_index_V.sum();
  out.U = out.per_index_U.sum();
  out.z_inv = z_inv;
  out.B = std::min(1.0, 1.0 / (static_cast<double>(n) * z_inv));
  out.iterations = 0;
  return out;
}

OneHotIdentity one_hot_identity_sides(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> oracle_labels) {
  const auto n = target.rows();
  const int k = target.num_actions();
  if (behavior.rows() != n || behavior.num_actions() != k || static_cast<Eigen::Index>(oracle_labels.size()) != n) {
    throw std::invalid_argument("one_hot_identity_sides: inputs differ in shape");
  }
  if (!behavior.has_full_support()) {
    throw SupportViolation("one_hot_identity_sides: behavior policy must have full support");
  }
  for (const int label : oracle_labels) {
    if (label < 1 || label > k) {
      throw std::invalid_argument("one_hot_identity_sides: label outside [1, K]");
    }
  }
  guard_enumeration(n, k);
  const RowMatrix table = weight_table(target, behavior);
  const RowMatrix probs = behavior.probs();

  OneHotIdentity sides;
  for_each_assignment(probs, slot_range(0, n), [&](const std::vector<int>& actions, double p) {
    double total = 0.0;
    double rewarded = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = actions[static_cast<std::size_t>(i)];
      total += table(i, a);
      if (a == oracle_labels[static_cast<std::size_t>(i)] - 1) {
        rewarded += table(i, a);
      }
    }
    if (total > 0.0) {
      sides.lhs += p * rewarded / total;
    }
  });

  for (Eigen::Index i = 0; i < n; ++i) {
    const int star = oracle_labels[static_cast<std::size_t>(i)] - 1;
    const double value = target.probs()(i, star);
    if (value == 0.0) {
      continue;
    }
    const double w_star = table(i, star);
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) {
        others.push_back(j);
      }
    }
    double expectation = 0.0;
    for_each_assignment(probs, others, [&](const std::vector<int>& actions, double p) {
      double rest = 0.0;
      for (std::size_t s = 0; s < others.size(); ++s) {
        rest += table(others[s], actions[s]);
      }
      expectation += p / (w_star + rest);
    });
    sides.rhs += value * expectation;
  }
  return sides;
}

double exact_wis_conditional_expectation(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> oracle_labels) {
  const auto sides = one_hot_identity_sides(target, behavior, oracle_labels);
  if (std::abs(sides.lhs - sides.rhs) > 1e-12) {
    throw std::logic_error("exact_wis_conditional_expectation: one-hot identity violated");
  }
  return sides.lhs;
}

}  // namespace ope
