#pragma once

// Reference computations used as test oracles. Each takes a different route
// from the production code: pair counting instead of rank sums, full
// enumeration instead of the counting recursion, O(n^2) rank counting,
// matrix-form WTS with a pseudo-inverse.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lyricscope/stats.hpp"

namespace oracle {

// U_a by comparing every pair (ties count one half).
inline double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) u += 1.0;
      else if (x == y) u += 0.5;
    }
  }
  return u;
}

// Two-tailed p over all relabelings: share of splits whose U is at least as
// far from its mean as the observed one.
inline double enumerate_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();
  const double mu = static_cast<double>(a.size() * b.size()) / 2.0;
  const double observed = std::abs(pair_count_u(a, b) - mu);
  std::uint64_t extreme = 0, total = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != na) continue;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? x : y).push_back(pooled[i]);
    ++total;
    if (std::abs(pair_count_u(x, y) - mu) >= observed - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

inline std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1.0;
      else if (v[j] == v[i] && j != i) equal += 1.0;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(cxy / std::sqrt(cxx * cyy));
}

inline double rank_then_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(counting_ranks(x), counting_ranks(y));
}

// N * mean' T (T V T)^+ T mean with T the projector onto the contrast and
// V = N * diag(s_i^2 / n_i).
inline double matrix_wts(const lyricscope::FactorialSample& sample, lyricscope::Effect effect) {
  std::array<std::vector<double>, 4> cells;
  for (const auto& obs : sample.observations) {
    cells[lyricscope::cell_index(obs.risk, obs.age)].push_back(obs.value);
  }
  Eigen::Vector4d mean;
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  double total = 0.0;
  for (int i = 0; i < 4; ++i) total += static_cast<double>(cells[i].size());
  for (int i = 0; i < 4; ++i) {
    const auto& c = cells[i];
    const double n = static_cast<double>(c.size());
    double m = 0.0;
    for (double x : c) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : c) ss += (x - m) * (x - m);
    mean(i) = m;
    v(i, i) = total * (ss / (n - 1.0)) / n;
  }
  Eigen::RowVector4d h;
  switch (effect) {
    case lyricscope::Effect::MainAge: h << 1, 1, -1, -1; break;
    case lyricscope::Effect::MainRisk: h << 1, -1, 1, -1; break;
    case lyricscope::Effect::Interaction: h << 1, -1, -1, 1; break;
  }
  const Eigen::Matrix4d t = h.transpose() * (h * h.transpose()).inverse() * h;
  const Eigen::Matrix4d middle = (t * v * t).completeOrthogonalDecomposition().pseudoInverse();
  return total * (mean.transpose() * t * middle * t * mean)(0, 0);
}

// Cut wherever consecutive timestamps differ by >= gap; returns run lengths.
inline std::vector<std::size_t> brute_split(const std::vector<long long>& ts, long long gap) {
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i == 0 || ts[i] - ts[i - 1] >= gap) sizes.push_back(0);
    ++sizes.back();
  }
  return sizes;
}

}  // namespace oracle
