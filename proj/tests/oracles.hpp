#pragma once

// Test-only reference computations, kept independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include "coord/beliefs.hpp"
#include "coord/random.hpp"

namespace oracle {

/// Two-sided permutation p-value of the rank-sum statistic by enumerating every
/// labelling with std::next_permutation; U from raw pairwise comparisons.
inline double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

inline double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<int> label(pooled.size(), 0);
  std::fill(label.end() - static_cast<long>(a.size()), label.end(), 1);
  const double mean = 0.5 * a.size() * b.size();
  const double observed = std::abs(pairwise_u(a, b) - mean);
  long extreme = 0, total = 0;
  do {
    std::vector<double> xa, xb;
    for (std::size_t i = 0; i < pooled.size(); ++i) (label[i] ? xa : xb).push_back(pooled[i]);
    ++total;
    if (std::abs(pairwise_u(xa, xb) - mean) >= observed - 1e-9) ++extreme;
  } while (std::next_permutation(label.begin(), label.end()));
  return static_cast<double>(extreme) / total;
}

/// beta = (X'X)^{-1} X'y by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t p = x[0].size();
  std::vector<std::vector<double>> m(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) m[i][j] += x[r][i] * x[r][j];
      m[i][p] += x[r][i] * y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k <= p; ++k) m[r][k] -= f * m[c][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = m[i][p] / m[i][i];
  return beta;
}

/// Standard normal quantile by bisection on the erfc-based CDF.
inline double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Arbitrary weakly decreasing curve: sorted uniforms, occasionally with flat runs and hard zeros.
inline coord::BeliefCurve random_curve(coord::Stream& rng, int grid_max) {
  std::vector<double> v(grid_max);
  for (auto& x : v) {
    const double u = rng.uniform();
    x = u < 0.1 ? 0.0 : (u > 0.9 ? 1.0 : rng.uniform());
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  v.insert(v.begin(), 1.0);
  return coord::BeliefCurve(std::move(v));
}

inline coord::UpdateParams random_update(coord::Stream& rng, double threshold) {
  coord::UpdateParams up;
  const auto form = rng.below(3);
  up.kernel_form = form == 0 ? coord::KernelForm::Exponential
                             : (form == 1 ? coord::KernelForm::Linear : coord::KernelForm::Step);
  up.kernel_scale = up.kernel_form == coord::KernelForm::Exponential ? rng.uniform() * 1.5
                                                                      : static_cast<double>(rng.below(8));
  up.failure_cap = rng.uniform() * threshold * 0.999;
  return up;
}

}  // namespace oracle
