#include "lyricscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "lyricscope/error.hpp"
#include "lyricscope/random.hpp"

namespace lyricscope {

const char* to_string(TestMethod m) {
  switch (m) {
    case TestMethod::Exact: return "exact";
    case TestMethod::Approximate: return "approximate";
    case TestMethod::Permutation: return "permutation";
  }
  return "?";
}

const char* to_string(Effect e) {
  switch (e) {
    case Effect::MainRisk: return "MainRisk";
    case Effect::MainAge: return "MainAge";
    case Effect::Interaction: return "Interaction";
  }
  return "?";
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double median(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double mann_whitney_exact_p(double u, std::size_t n_a, std::size_t n_b) {
  // counts[k][s]: subsets of size k from ranks 1..N with rank sum s.
  const std::size_t total = n_a + n_b;
  const std::size_t max_sum = total * (total + 1) / 2;
  std::vector<std::vector<double>> counts(n_a + 1, std::vector<double>(max_sum + 1, 0.0));
  counts[0][0] = 1.0;
  for (std::size_t r = 1; r <= total; ++r) {
    for (std::size_t k = std::min(r, n_a); k >= 1; --k) {
      for (std::size_t s = max_sum; s >= r; --s) counts[k][s] += counts[k - 1][s - r];
    }
  }
  const std::size_t offset = n_a * (n_a + 1) / 2;
  double le = 0.0;
  double all = 0.0;
  for (std::size_t s = offset; s <= max_sum; ++s) {
    const double c = counts[n_a][s];
    all += c;
    if (static_cast<double>(s - offset) <= u + 1e-9) le += c;
  }
  return std::min(1.0, 2.0 * le / all);
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          const MannWhitneyOptions& options) {
  if (a.empty() || b.empty()) throw DomainError("Mann-Whitney U needs two non-empty samples");
  const std::size_t n_a = a.size();
  const std::size_t n_b = b.size();
  const std::size_t total = n_a + n_b;

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n_a), 0.0);
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  const double u_b = na * nb - u_a;
  const double u = std::min(u_a, u_b);

  // Sum of t^3 - t over tie groups.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  TestResult result;
  result.test = "mann_whitney_u";
  result.statistic = u;
  result.n_per_group = {n_a, n_b};
  result.medians = {median(a), median(b)};

  if (total <= options.exact_max_total && tie_term == 0.0) {
    result.method = TestMethod::Exact;
    result.p_value = mann_whitney_exact_p(u, n_a, n_b);
    return result;
  }

  result.method = TestMethod::Approximate;
  const double n = static_cast<double>(total);
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  double diff = std::abs(u - mu);
  if (options.continuity_correction) diff = std::max(0.0, diff - 0.5);
  const double z = diff / std::sqrt(var);
  result.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
  return result;
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("Spearman needs paired samples of equal length");
  if (x.size() < 3) throw DomainError("Spearman needs at least 3 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("Spearman correlation of a constant vector");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  TestResult result;
  result.test = "spearman";
  result.statistic = rho;
  result.n_per_group = {x.size(), y.size()};
  result.medians = {median(x), median(y)};
  result.method = TestMethod::Approximate;
  if (std::abs(rho) >= 1.0) {
    result.p_value = 0.0;
    return result;
  }
  const double df = n - 2.0;
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t dist(df);
  result.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return result;
}

std::size_t cell_index(RiskGroup risk, AgeGroup age) {
  if (risk == RiskGroup::Excluded) throw DomainError("factorial observation with Excluded risk group");
  if (age == AgeGroup::OutOfRange) throw DomainError("factorial observation with OutOfRange age group");
  return (age == AgeGroup::Young ? 0 : 2) + (risk == RiskGroup::AtRisk ? 0 : 1);
}

std::array<double, 4> contrast(Effect effect) {
  switch (effect) {
    case Effect::MainAge: return {0.5, 0.5, -0.5, -0.5};
    case Effect::MainRisk: return {0.5, -0.5, 0.5, -0.5};
    case Effect::Interaction: return {1.0, -1.0, -1.0, 1.0};
  }
  return {};
}

namespace {

std::array<CellSummary, 4> summarize(std::span<const double> values, std::span<const std::size_t> cells) {
  std::array<CellSummary, 4> out{};
  std::array<double, 4> sums{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    ++out[cells[i]].n;
    sums[cells[i]] += values[i];
  }
  for (std::size_t c = 0; c < 4; ++c) {
    if (out[c].n > 0) out[c].mean = sums[c] / static_cast<double>(out[c].n);
  }
  std::array<double, 4> ss{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - out[cells[i]].mean;
    ss[cells[i]] += d * d;
  }
  for (std::size_t c = 0; c < 4; ++c) {
    if (out[c].n > 1) out[c].variance = ss[c] / static_cast<double>(out[c].n - 1);
  }
  return out;
}

// Returns a negative value when the denominator vanishes.
double wts_from_cells(const std::array<CellSummary, 4>& cells, const std::array<double, 4>& c) {
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    numerator += c[i] * cells[i].mean;
    denominator += c[i] * c[i] * cells[i].variance / static_cast<double>(cells[i].n);
  }
  if (!(denominator > 0.0)) return -1.0;
  return numerator * numerator / denominator;
}

struct Prepared {
  std::vector<double> values;
  std::vector<std::size_t> cells;
};

Prepared prepare(const FactorialSample& sample) {
  Prepared p;
  p.values.reserve(sample.observations.size());
  p.cells.reserve(sample.observations.size());
  for (const auto& obs : sample.observations) {
    p.cells.push_back(cell_index(obs.risk, obs.age));
    p.values.push_back(obs.value);
  }
  return p;
}

void require_cells(const std::array<CellSummary, 4>& cells) {
  for (std::size_t c = 0; c < 4; ++c) {
    if (cells[c].n < 2) {
      throw DomainError("factorial cell " + std::to_string(c) + " has " + std::to_string(cells[c].n) +
                        " observations; at least 2 required");
    }
  }
}

}  // namespace

std::array<CellSummary, 4> summarize_cells(const FactorialSample& sample) {
  const auto p = prepare(sample);
  return summarize(p.values, p.cells);
}

double wald_type_statistic(const FactorialSample& sample, Effect effect) {
  const auto cells = summarize_cells(sample);
  require_cells(cells);
  const double wts = wts_from_cells(cells, contrast(effect));
  if (wts < 0.0) {
    throw DegenerateVarianceError(std::string("WTS denominator is zero for effect ") + to_string(effect));
  }
  return wts;
}

WtsResult permuted_wts(const FactorialSample& sample, Effect effect, std::size_t n_permutations,
                       std::uint64_t seed, unsigned threads) {
  if (n_permutations < 100) throw DomainError("permuted WTS needs at least 100 permutations");
  const auto prepared = prepare(sample);
  const auto observed_cells = summarize(prepared.values, prepared.cells);
  require_cells(observed_cells);
  const auto c = contrast(effect);
  const double observed = wts_from_cells(observed_cells, c);
  if (observed < 0.0) {
    throw DegenerateVarianceError(std::string("WTS denominator is zero for effect ") + to_string(effect));
  }
  // Relative slack so that a permutation reproducing the observed layout is
  // not lost to rounding.
  const double cutoff = observed * (1.0 - 1e-12);

  auto count_block = [&](std::size_t begin, std::size_t end) {
    std::size_t hits = 0;
    std::vector<double> values = prepared.values;
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng(derive_seed(seed, i));
      // Start every permutation from the original order so permutation i is
      // independent of which worker runs it.
      std::copy(prepared.values.begin(), prepared.values.end(), values.begin());
      shuffle(rng, std::span<double>(values));
      const double stat = wts_from_cells(summarize(values, prepared.cells), c);
      if (stat < 0.0 || stat >= cutoff) ++hits;
    }
    return hits;
  };

  std::size_t hits = 0;
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_permutations)));
  if (workers == 1) {
    hits = count_block(0, n_permutations);
  } else {
    std::vector<std::size_t> partial(workers, 0);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = n_permutations * w / workers;
        const std::size_t end = n_permutations * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] { partial[w] = count_block(begin, end); });
      }
    }
    hits = std::accumulate(partial.begin(), partial.end(), std::size_t{0});
  }

  WtsResult result;
  result.effect = effect;
  result.statistic = observed;
  result.n_permutations = n_permutations;
  result.seed = seed;
  result.p_value = (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(n_permutations));
  for (std::size_t i = 0; i < 4; ++i) result.cell_n[i] = observed_cells[i].n;
  return result;
}

}  // namespace lyricscope
