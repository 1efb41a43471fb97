#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gbps/rng.hpp"

namespace gbps {

/// Point on the probability simplex: non-negative entries summing to one.
///
/// Construction renormalizes inputs whose sum deviates from 1 by less than
/// kSumTolerance and rejects larger deviations, so accumulated float drift
/// is absorbed without masking logic errors. Entries in [-kSumTolerance, 0)
/// are clamped to zero; anything more negative is rejected.
class SimplexWeights {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SimplexWeights(std::vector<double> values);

  static SimplexWeights uniform(std::size_t n);
  static SimplexWeights vertex(std::size_t n, std::size_t index);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

 private:
  std::vector<double> values_;
};

/// Per-expert losses z = (z_j); entries must be finite.
class LossVector {
 public:
  explicit LossVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// J expert policies over K actions, one simplex row per expert.
class PolicyMatrix {
 public:
  explicit PolicyMatrix(std::vector<SimplexWeights> rows);

  std::size_t experts() const noexcept { return rows_.size(); }
  std::size_t actions() const noexcept { return rows_.front().size(); }
  const SimplexWeights& row(std::size_t j) const { return rows_[j]; }

 private:
  std::vector<SimplexWeights> rows_;
};

/// Mixture policy pi(a) = sum_j theta_j * w_j(a).
SimplexWeights ensemble_policy(const SimplexWeights& theta, const PolicyMatrix& policies);

/// Ensemble loss L(theta, z) = <theta, z>. Always lies in [min z, max z].
double ensemble_loss(const SimplexWeights& theta, const LossVector& losses);

/// Euclidean projection onto the simplex (O(n log n) sort-and-threshold).
/// Idempotent; feasible inputs come back unchanged up to rounding.
SimplexWeights project_to_simplex(std::span<const double> point);

/// Dirichlet(alpha) draw; all alpha_i > 0.
SimplexWeights sample_dirichlet(std::span<const double> alpha, Rng& rng);

}  // namespace gbps
