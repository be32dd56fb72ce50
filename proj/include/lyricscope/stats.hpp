#pragma once

// Nonparametric tests used to compare the At-Risk and No-Risk groups:
// two-tailed Mann-Whitney U, Spearman rank correlation, and the permuted
// Wald-type statistic (WTS) for the 2x2 age x risk design.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lyricscope/corpus.hpp"

namespace lyricscope {

enum class TestMethod { Exact, Approximate, Permutation };
const char* to_string(TestMethod m);

struct TestResult {
  std::string test;
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<std::size_t> n_per_group;
  std::vector<double> medians;
  TestMethod method = TestMethod::Approximate;
};

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double median(std::span<const double> values);

struct MannWhitneyOptions {
  // Exact enumeration is used when n_a + n_b <= this and the pooled sample
  // has no ties; otherwise the tie-corrected normal approximation.
  std::size_t exact_max_total = 20;
  bool continuity_correction = true;
};

// U = min(U_a, U_b). Throws DomainError on an empty sample.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          const MannWhitneyOptions& options = {});

// Two-tailed exact p for a tie-free sample: min(1, 2 P(U_a <= u)).
double mann_whitney_exact_p(double u, std::size_t n_a, std::size_t n_b);

// statistic = rho; p from Student t with n - 2 degrees of freedom.
// Throws DomainError on length mismatch or n < 3, UndefinedCorrelationError
// when either vector is constant.
TestResult spearman(std::span<const double> x, std::span<const double> y);

struct FactorialObservation {
  RiskGroup risk = RiskGroup::AtRisk;  // AtRisk or NoRisk
  AgeGroup age = AgeGroup::Young;      // Young or Older
  double value = 0.0;
};

struct FactorialSample {
  std::vector<FactorialObservation> observations;
};

enum class Effect { MainRisk, MainAge, Interaction };
inline constexpr std::array<Effect, 3> kEffects = {Effect::MainRisk, Effect::MainAge,
                                                  Effect::Interaction};
const char* to_string(Effect e);

// Cells in the order Young*AtRisk, Young*NoRisk, Older*AtRisk, Older*NoRisk.
// Throws DomainError for observations outside the two levels of a factor.
std::size_t cell_index(RiskGroup risk, AgeGroup age);

struct CellSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance (n - 1)
};

std::array<CellSummary, 4> summarize_cells(const FactorialSample& sample);

// Contrast over the cell order above.
std::array<double, 4> contrast(Effect effect);

// WTS = (c . mean)^2 / sum_i c_i^2 s_i^2 / n_i.
// Throws DomainError if a cell has fewer than 2 observations and
// DegenerateVarianceError if the denominator is zero.
double wald_type_statistic(const FactorialSample& sample, Effect effect);

struct WtsResult {
  Effect effect = Effect::MainRisk;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  std::array<std::size_t, 4> cell_n{};
};

inline constexpr std::size_t kDefaultPermutations = 10000;

// Values are shuffled freely across cells (cell sizes fixed) and the WTS
// recomputed; p = (1 + #{permuted >= observed}) / (1 + n_permutations).
// Permutation i draws from its own stream derive_seed(seed, i), and workers
// take contiguous index blocks, so the result is identical for any thread
// count. Degenerate permuted statistics count as >= observed.
WtsResult permuted_wts(const FactorialSample& sample, Effect effect,
                       std::size_t n_permutations = kDefaultPermutations, std::uint64_t seed = 0,
                       unsigned threads = 1);

}  // namespace lyricscope
