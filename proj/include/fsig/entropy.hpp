#pragma once

#include <span>
#include <vector>

#include "fsig/dataset.hpp"
#include "fsig/lattice.hpp"
#include "fsig/linear_sketch.hpp"

namespace fsig {

// Empirical false non-matching rate: the fraction of probes that fall
// outside the acceptance region of their own user's enrollment sample.
double estimate_fnmr(const BiometricDataset& ds, const TriangularLattice& lat);

struct EntryScales {
  std::vector<double> scales;  // ascending; one per impostor pair
  std::size_t k_max = 0;       // impostor pair count
};

// Entry scale of every impostor pair, sorted ascending.  k(w), the number of
// impostor samples inside the w-scaled acceptance region, is then the rank
// of w in this list.  Pair-level work runs data-parallel; the sorted output
// is independent of the thread count.
EntryScales impostor_entry_scales(const BiometricDataset& ds,
                                  const TriangularLattice& lat);

// Tail fit over the power family f(w) = a w^b on [0, w*].
struct EvaFit {
  std::size_t k_star = 0;
  double w_star = 0.0;
  std::size_t k_max = 0;
  std::vector<double> entry_scales;  // the sorted sample the fit was run on
  double b = 0.0;
  double r_exponent = 0.0;    // r = b + 1
  double estimate_at_1 = 0.0; // fitted tail probability at w = 1, in [0,1]

  // Fitted curve w -> k* (w/w*)^r / k_max, for plot emission.
  double fitted_at(double w) const;
};

// Maximum-likelihood exponent of the power family given the k* smallest
// scales and the cut point w*: b = k*/(k* ln w* - sum ln w_n) - 1.  Throws
// DegenerateStatistics when the denominator is not positive.
double eva_mle_exponent(std::span<const double> scales, double w_star);

// Full fit with w* = the k*-th smallest entry scale (1-based, as in the
// definition of the w_n sequence).
EvaFit eva_fit(std::vector<double> entry_scales_sorted, std::size_t k_max,
               std::size_t k_star);

struct BinnedConfmr {
  int bin_count = 0;
  std::vector<double> bin_edges;          // size M+1, edges[0] = 0
  std::vector<double> per_bin_estimates;  // ConFMR~_t
  std::vector<EvaFit> per_bin_fits;

  std::vector<double> midpoints() const;  // (edge[t-1] + edge[t]) / 2
};

// Sorts impostor pairs by Euclidean sketch distance, cuts them into M
// equal-count bins, and runs the tail fit inside each bin with
// k* = round(k_star_fraction * bin population).
BinnedConfmr estimate_confmr_bins(const BiometricDataset& ds,
                                  const SketchParams& params, int bins,
                                  double k_star_fraction);

struct TTestResult {
  double r_corr = 0.0;
  double t_stat = 0.0;
  double p_value = 0.0;
  int dof = 0;
  bool uncorrelated_at_005 = false;  // p >= 0.05
};

// Pearson correlation of (x_t, log estimate_t) with the two-sided p-value of
// t = r sqrt(M-2)/sqrt(1-r^2) under the t-distribution with M-2 degrees of
// freedom.
TTestResult t_test(std::span<const double> xs, std::span<const double> estimates);

// The p-value step alone, for a correlation value obtained elsewhere.
TTestResult t_test_from_r(double r, int sample_count);

// Two-sided tail probability of Student's t via the regularized incomplete
// beta function.
double student_t_two_sided_p(double t, double dof);
double regularized_incomplete_beta(double a, double b, double x);

struct ThresholdSplit {
  double per_source_fnmr = 0.0;    // 1 - (1 - target)^(1/m)
  double per_source_confmr = 0.0;  // target^(1/m)
};

ThresholdSplit combine_thresholds(int m, double target_fnmr, double target_confmr);

// Leftover-hash-lemma distinguishing bound (1/2) sqrt(|R| COL), clamped to
// [0, 1].
double lhl_bound(double range_size, double col);

// Average conditional collision probability COL(X|C) of an explicit joint
// table joint[x][c]:  sum_c sum_x p(x,c)^2  /  sum_c (sum_x p(x,c))^2.
double collision_prob(const std::vector<std::vector<double>>& joint);

// Shared analysis pipeline: global tail fit + binned estimates + t-test on
// (bin midpoint, log estimate).
struct ConfmrAnalysis {
  EvaFit global_fit;
  BinnedConfmr bins;
  TTestResult ttest;
};

ConfmrAnalysis analyze_confmr(const BiometricDataset& ds, const SketchParams& params,
                              int bins, double global_k_star_fraction,
                              double bin_k_star_fraction);

struct DetSweepRow {
  double d = 0.0;
  double fnmr_m = 0.0;    // 1 - (1 - FNMR)^m
  double confmr_m = 0.0;  // ConFMR^m
  double p_value = 0.0;
  double r_corr = 0.0;
};

struct DetSweepOptions {
  int bins = 20;
  double global_k_star_fraction = 0.001;
  double bin_k_star_fraction = 0.005;
  std::string seed = "det-sweep";
};

// One row per basis length d; lattice and sketch are re-derived for each d
// against the same dataset.
std::vector<DetSweepRow> det_sweep(const BiometricDataset& ds, int n,
                                   std::span<const double> d_values, int m,
                                   const Bignum& modulus,
                                   const DetSweepOptions& options = {});

}  // namespace fsig
