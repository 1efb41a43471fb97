#include "gbps/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gbps/errors.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail_validation("validation", std::string(what) + " contains a non-finite entry");
  }
}

}  // namespace

SimplexWeights::SimplexWeights(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) fail_validation("validation", "simplex point must have at least one entry");
  check_finite(values_, "simplex point");
  double sum = 0.0;
  for (double& v : values_) {
    if (v < 0.0) {
      if (v < -kSumTolerance) {
        fail_validation("validation",
                        "simplex entry " + detail::format_g12(v) + " is negative beyond tolerance");
      }
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    fail_validation("validation", "simplex entries sum to " + detail::format_g12(sum) +
                                      ", outside tolerance " + detail::format_g12(kSumTolerance));
  }
  if (sum != 1.0) {
    for (double& v : values_) v /= sum;
  }
}

SimplexWeights SimplexWeights::uniform(std::size_t n) {
  if (n == 0) fail_validation("validation", "simplex dimension must be positive");
  return SimplexWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SimplexWeights SimplexWeights::vertex(std::size_t n, std::size_t index) {
  if (n == 0) fail_validation("validation", "simplex dimension must be positive");
  if (index >= n) fail_validation("validation", "vertex index out of range");
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return SimplexWeights(std::move(v));
}

LossVector::LossVector(std::vector<double> values) : values_(std::move(values)) {
  check_finite(values_, "loss vector");
}

PolicyMatrix::PolicyMatrix(std::vector<SimplexWeights> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) fail_validation("validation", "policy matrix needs at least one expert row");
  const std::size_t k = rows_.front().size();
  for (const auto& row : rows_) {
    if (row.size() != k) {
      fail_validation("dimension", "policy rows have mixed lengths: " + std::to_string(k) + " vs " +
                                       std::to_string(row.size()));
    }
  }
}

SimplexWeights ensemble_policy(const SimplexWeights& theta, const PolicyMatrix& policies) {
  if (theta.size() != policies.experts()) {
    fail_validation("dimension", "ensemble weights have length " + std::to_string(theta.size()) +
                                     " but there are " + std::to_string(policies.experts()) +
                                     " expert policies");
  }
  std::vector<double> out(policies.actions(), 0.0);
  for (std::size_t j = 0; j < policies.experts(); ++j) {
    const SimplexWeights& row = policies.row(j);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += theta[j] * row[a];
  }
  return SimplexWeights(std::move(out));
}

double ensemble_loss(const SimplexWeights& theta, const LossVector& losses) {
  if (theta.size() != losses.size()) {
    fail_validation("dimension", "ensemble weights have length " + std::to_string(theta.size()) +
                                     " but loss vector has length " + std::to_string(losses.size()));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) total += theta[j] * losses[j];
  return total;
}

SimplexWeights project_to_simplex(std::span<const double> point) {
  if (point.empty()) fail_validation("validation", "cannot project an empty vector");
  check_finite(point, "projection input");

  // Sort-and-threshold: find rho = max{k : u_k + (1 - sum_{i<=k} u_i)/k > 0}
  // with u sorted descending, then shift by tau and clip at zero.
  std::vector<double> sorted(point.begin(), point.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    running += sorted[k];
    const double candidate = (1.0 - running) / static_cast<double>(k + 1);
    if (sorted[k] + candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) out[i] = std::max(0.0, point[i] + tau);
  return SimplexWeights(std::move(out));
}

SimplexWeights sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  if (alpha.empty()) fail_validation("validation", "Dirichlet needs at least one concentration entry");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      fail_validation("validation", "Dirichlet concentration must be positive, got " + detail::format_g12(a));
    }
  }
  std::vector<double> draws(alpha.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    draws[i] = rng.gamma(alpha[i]);
    sum += draws[i];
  }
  if (sum <= 0.0) return SimplexWeights::uniform(alpha.size());  // all gammas underflowed
  for (double& d : draws) d /= sum;
  return SimplexWeights(std::move(draws));
}

}  // namespace gbps
