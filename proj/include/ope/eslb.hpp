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

#ifndef OPE_ESLB_HPP
#define OPE_ESLB_HPP

#include <ope/core.hpp>
#include <ope/report.hpp>

#include <cstdint>
#include <span>
#include <variant>

/**
 * \file
 * \brief Efron-Stein lower bound on the value of a target policy built on the WIS estimator.
 *
 * The bound needs three conditional expectations over simulated importance weights, given the
 * logged contexts: a variance proxy V, its companion U, and z_inv = E[1 / min_k Z^{\k}] which gives
 * the multiplicative bias B = min(1, 1 / (n z_inv)). They are estimated by Monte-Carlo
 * (`mc_estimate_proxies`) or, for tiny instances, computed exactly (`exact_proxies_enumeration`).
 *
 * Every Monte-Carlo iteration draws three independent action tuples from the behavior policy:
 * A' fills the unobserved tail of the partial sums and supplies the replacement weight of slot k,
 * which is both the numerator and part of the denominator Z^{(k)}, so every ratio lies in [0, 1];
 * A'' feeds the U term and A''' feeds z_inv.
 */

namespace ope {

/// A fixed number of iterations, each averaging `batch` independent simulations.
struct FixedSchedule {
  std::int64_t iterations = 100;
  int batch = 10;
};

/// Run until the empirical Bernstein test passes for V, U and z_inv at checkpoints t = 2, 4, 8, ...
struct AdaptiveSchedule {
  double eps = 0.0;  ///< Simulation precision; 0 selects 1/n.
  double x = 3.0;    ///< Exponent of each convergence test (each fails w.p. at most e^{-x}).
  int batch = 1;
  std::int64_t max_iterations = std::int64_t{1} << 20;
};

using MCSchedule = std::variant<FixedSchedule, AdaptiveSchedule>;

struct MCOptions {
  std::uint64_t seed = 0;
  MCSchedule schedule = FixedSchedule{};
  int workers = 1;
};

/// Estimates (or exact values) of the conditional expectations entering the bound.
struct VarianceProxies {
  double V = 0.0;
  double U = 0.0;
  double B = 0.0;
  double z_inv = 0.0;
  std::int64_t iterations = 0;
  bool converged = true;
  double mc_error_budget = 0.0;  ///< eps of the adaptive schedule; 0 for fixed schedules and exact values.
  int checks = 0;                ///< Number of convergence tests that were run.
  double V_stderr = 0.0;
  double U_stderr = 0.0;
  double z_inv_stderr = 0.0;
  Eigen::VectorXd per_index_V;  ///< Per-slot contributions; sums to V.
  Eigen::VectorXd per_index_U;
};

/// Monte-Carlo estimate of V, U and z_inv. Bit-identical for a given (seed, schedule) whatever
/// the number of workers.
VarianceProxies mc_estimate_proxies(
    const PolicyTable& target, const PolicyTable& behavior, const WeightVector& weights, const MCOptions& options);

/// Empirical Bernstein stopping test:
/// sqrt(2 var / t) + (7/3) * range * x / (t - 1) <= eps.
bool convergence_check(double sample_variance, std::int64_t t, double x, double range, double eps);

/// Range of the z_inv samples, 1 / sum_i min_a target(a|X_i) / behavior(a|X_i) (infinite if the sum is 0).
double z_inv_range(const PolicyTable& target, const PolicyTable& behavior);

/// Assembles (B (v_hat - eps)_+ - sqrt(x / 2n))_+ with
/// eps = sqrt(2 (V + U) (x + ln(1 + V / U) / 2)).
/// Proxies with a simulation budget are inflated by it first.
BoundReport eslb_bound(const VarianceProxies& proxies, double v_hat_sn, Eigen::Index n, double x);

/// Convenience wrapper: weights, WIS estimate, proxies and bound in one call.
BoundReport eslb(
    const PolicyTable& target,
    const PolicyTable& behavior,
    std::span<const int> actions,
    const Eigen::VectorXd& rewards,
    const ConfidenceSpec& confidence,
    const MCOptions& options);

/// Largest K^n accepted by the enumeration oracles.
inline constexpr double kMaxEnumeration = 1e6;

/// Exact V, U, z_inv and B by enumerating every action tuple, using the same term structure
/// as the Monte-Carlo estimator.
VarianceProxies exact_proxies_enumeration(
    const PolicyTable& target, const PolicyTable& behavior, const WeightVector& weights);

/// Both sides of the one-hot identity
/// E[v_sn | X] = sum_i v(pi | X_i) E[1 / (w*_i + Z^{\i}) | X].
struct OneHotIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
};

OneHotIdentity one_hot_identity_sides(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> oracle_labels);

/// E[v_sn | X] under one-hot rewards at the oracle labels, by enumeration. Throws
/// `std::logic_error` if the two sides of the identity disagree by more than 1e-12.
double exact_wis_conditional_expectation(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> oracle_labels);

}  // namespace ope

#endif
