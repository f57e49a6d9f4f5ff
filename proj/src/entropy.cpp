#include "fsig/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fsig/errors.hpp"
#include "fsig/parallel.hpp"

namespace fsig {

double estimate_fnmr(const BiometricDataset& ds, const TriangularLattice& lat) {
  if (ds.users.empty() || ds.total_probes() == 0) {
    throw std::invalid_argument("estimate_fnmr: empty dataset");
  }
  std::size_t outside = 0;
  std::size_t total = 0;
  for (const auto& u : ds.users) {
    for (const auto& probe : u.probes) {
      if (!in_acceptance_region(lat, u.enrollment, probe)) ++outside;
      ++total;
    }
  }
  return static_cast<double>(outside) / static_cast<double>(total);
}

namespace {

std::vector<double> pair_entry_scales(const BiometricDataset& ds,
                                      const TriangularLattice& lat,
                                      const std::vector<ImpostorPair>& pairs) {
  std::vector<double> scales(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& pr = pairs[i];
      const Eigen::VectorXd diff =
          ds.users[pr.enroll_user].enrollment - ds.users[pr.probe_user].probes[pr.probe_idx];
      scales[i] = diff.isZero(0.0) ? 0.0 : entry_scale(lat, diff);
    }
  });
  return scales;
}

}  // namespace

EntryScales impostor_entry_scales(const BiometricDataset& ds,
                                  const TriangularLattice& lat) {
  if (ds.users.size() < 2) return EntryScales{};
  const auto pairs = impostor_pairs(ds);
  EntryScales out;
  out.k_max = pairs.size();
  out.scales = pair_entry_scales(ds, lat, pairs);
  std::sort(out.scales.begin(), out.scales.end());
  return out;
}

double eva_mle_exponent(std::span<const double> scales, double w_star) {
  if (scales.empty()) throw DegenerateStatistics("tail fit: empty sample");
  if (!(w_star > 0.0)) throw DegenerateStatistics("tail fit: cut point must be positive");
  double log_sum = 0.0;
  for (const double w : scales) {
    if (!(w > 0.0)) throw DegenerateStatistics("tail fit: non-positive entry scale");
    log_sum += std::log(w);
  }
  const double k = static_cast<double>(scales.size());
  const double denom = k * std::log(w_star) - log_sum;
  if (!(denom > 0.0)) {
    throw DegenerateStatistics("tail fit: degenerate sample (all scales at the cut point)");
  }
  return k / denom - 1.0;
}

double EvaFit::fitted_at(double w) const {
  if (k_max == 0) return 0.0;
  const double base = static_cast<double>(k_star) / static_cast<double>(k_max);
  return std::min(1.0, base * std::pow(w / w_star, r_exponent));
}

EvaFit eva_fit(std::vector<double> entry_scales_sorted, std::size_t k_max,
               std::size_t k_star) {
  if (k_star < 2) throw std::invalid_argument("tail fit: k* must be at least 2");
  if (k_star > entry_scales_sorted.size()) {
    throw std::invalid_argument("tail fit: k* exceeds the sample size");
  }
  if (k_max < entry_scales_sorted.size()) {
    throw std::invalid_argument("tail fit: k_max smaller than the sample");
  }
  if (!std::is_sorted(entry_scales_sorted.begin(), entry_scales_sorted.end())) {
    throw std::invalid_argument("tail fit: entry scales must be sorted ascending");
  }
  EvaFit fit;
  fit.k_star = k_star;
  fit.k_max = k_max;
  fit.w_star = entry_scales_sorted[k_star - 1];
  fit.b = eva_mle_exponent({entry_scales_sorted.data(), k_star}, fit.w_star);
  fit.r_exponent = fit.b + 1.0;
  fit.estimate_at_1 = std::min(
      1.0, static_cast<double>(k_star) /
               (static_cast<double>(k_max) * std::pow(fit.w_star, fit.r_exponent)));
  fit.entry_scales = std::move(entry_scales_sorted);
  return fit;
}

std::vector<double> BinnedConfmr::midpoints() const {
  std::vector<double> mids(per_bin_estimates.size());
  for (std::size_t t = 0; t < mids.size(); ++t) {
    mids[t] = 0.5 * (bin_edges[t] + bin_edges[t + 1]);
  }
  return mids;
}

namespace {

struct PairStats {
  std::vector<double> dists;   // sketch distance per impostor pair
  std::vector<double> scales;  // entry scale per impostor pair
};

PairStats impostor_pair_stats(const BiometricDataset& ds, const SketchParams& params) {
  // Sketch value of every sample, computed once.  Only the c part is used
  // (the q_c map); proxy keys are irrelevant to the distance statistics.
  std::vector<Eigen::VectorXd> enroll_c(ds.users.size());
  std::vector<std::vector<Eigen::VectorXd>> probe_c(ds.users.size());
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    enroll_c[u] = sketch(params, ds.users[u].enrollment).c;
    probe_c[u].reserve(ds.users[u].probes.size());
    for (const auto& probe : ds.users[u].probes) {
      probe_c[u].push_back(sketch(params, probe).c);
    }
  }

  const auto pairs = impostor_pairs(ds);
  PairStats stats;
  stats.dists.resize(pairs.size());
  stats.scales.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& pr = pairs[i];
      stats.dists[i] =
          (enroll_c[pr.enroll_user] - probe_c[pr.probe_user][pr.probe_idx]).norm();
      const Eigen::VectorXd diff =
          ds.users[pr.enroll_user].enrollment - ds.users[pr.probe_user].probes[pr.probe_idx];
      stats.scales[i] = diff.isZero(0.0) ? 0.0 : entry_scale(params, diff);
    }
  });
  return stats;
}

BinnedConfmr bin_and_fit(const PairStats& stats, int bins, double k_star_fraction) {
  const std::size_t k_max = stats.dists.size();
  if (bins < 1) throw std::invalid_argument("binned estimate: need at least one bin");
  if (k_max == 0) throw DegenerateStatistics("binned estimate: no impostor pairs");
  if (static_cast<std::size_t>(bins) > k_max) {
    throw DegenerateStatistics("binned estimate: more bins than impostor pairs");
  }
  if (!(k_star_fraction > 0.0) || k_star_fraction > 1.0) {
    throw std::invalid_argument("binned estimate: k* fraction must be in (0,1]");
  }

  std::vector<std::size_t> order(k_max);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (stats.dists[a] != stats.dists[b]) return stats.dists[a] < stats.dists[b];
    return a < b;
  });

  BinnedConfmr out;
  out.bin_count = bins;
  out.bin_edges.resize(bins + 1);
  out.bin_edges[0] = 0.0;
  for (int t = 1; t <= bins; ++t) {
    const std::size_t rank = static_cast<std::size_t>(t) * k_max / bins;  // 1-based
    out.bin_edges[t] = stats.dists[order[rank - 1]];
  }

  for (int t = 1; t <= bins; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t - 1) * k_max / bins;
    const std::size_t hi = static_cast<std::size_t>(t) * k_max / bins;
    const std::size_t population = hi - lo;
    const auto k_star = static_cast<std::size_t>(
        std::llround(k_star_fraction * static_cast<double>(population)));
    if (k_star < 10) {
      throw DegenerateStatistics(
          "binned estimate: under-populated bin (k* = " + std::to_string(k_star) +
          ", need >= 10 tail points per bin)");
    }
    std::vector<double> bin_scales;
    bin_scales.reserve(population);
    for (std::size_t i = lo; i < hi; ++i) bin_scales.push_back(stats.scales[order[i]]);
    std::sort(bin_scales.begin(), bin_scales.end());
    EvaFit fit = eva_fit(std::move(bin_scales), population, k_star);
    out.per_bin_estimates.push_back(fit.estimate_at_1);
    out.per_bin_fits.push_back(std::move(fit));
  }
  return out;
}

}  // namespace

BinnedConfmr estimate_confmr_bins(const BiometricDataset& ds, const SketchParams& params,
                                  int bins, double k_star_fraction) {
  return bin_and_fit(impostor_pair_stats(ds, params), bins, k_star_fraction);
}

TTestResult t_test_from_r(double r, int sample_count) {
  if (sample_count < 3) throw std::invalid_argument("t-test: need at least 3 samples");
  if (!(r >= -1.0 && r <= 1.0)) throw std::invalid_argument("t-test: correlation out of range");
  TTestResult out;
  out.r_corr = r;
  out.dof = sample_count - 2;
  const double dof = static_cast<double>(out.dof);
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) {
    out.t_stat = r > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
  } else {
    out.t_stat = r * std::sqrt(dof) / std::sqrt(denom);
    out.p_value = student_t_two_sided_p(out.t_stat, dof);
  }
  out.uncorrelated_at_005 = out.p_value >= 0.05;
  return out;
}

TTestResult t_test(std::span<const double> xs, std::span<const double> estimates) {
  if (xs.size() != estimates.size()) throw std::invalid_argument("t-test: size mismatch");
  const std::size_t m = xs.size();
  if (m < 3) throw std::invalid_argument("t-test: need at least 3 samples");

  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(estimates[i] > 0.0)) {
      throw DegenerateStatistics("t-test: estimates must be positive (log scale)");
    }
    ys[i] = std::log(estimates[i]);
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(m);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateStatistics("t-test: zero variance in a coordinate");
  }
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return t_test_from_r(r, static_cast<int>(m));
}

namespace {

double log_gamma(double x) { return std::lgamma(x); }

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_bt = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cf(a, b, x) / a;
  }
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

ThresholdSplit combine_thresholds(int m, double target_fnmr, double target_confmr) {
  if (m < 1) throw std::invalid_argument("combine_thresholds: m must be >= 1");
  if (!(target_fnmr > 0.0 && target_fnmr < 1.0) ||
      !(target_confmr > 0.0 && target_confmr < 1.0)) {
    throw std::invalid_argument("combine_thresholds: targets must be in (0,1)");
  }
  ThresholdSplit out;
  out.per_source_fnmr = 1.0 - std::pow(1.0 - target_fnmr, 1.0 / m);
  out.per_source_confmr = std::pow(target_confmr, 1.0 / m);
  return out;
}

double lhl_bound(double range_size, double col) {
  if (!(range_size >= 1.0)) throw std::invalid_argument("lhl_bound: range size must be >= 1");
  if (!(col >= 0.0 && col <= 1.0)) throw std::invalid_argument("lhl_bound: col outside [0,1]");
  return std::clamp(0.5 * std::sqrt(range_size * col), 0.0, 1.0);
}

double collision_prob(const std::vector<std::vector<double>>& joint) {
  if (joint.empty() || joint.front().empty()) {
    throw std::invalid_argument("collision_prob: empty table");
  }
  const std::size_t cols = joint.front().size();
  double total = 0.0;
  for (const auto& row : joint) {
    if (row.size() != cols) throw std::invalid_argument("collision_prob: ragged table");
    for (const double v : row) {
      if (!(v >= 0.0)) throw std::invalid_argument("collision_prob: negative mass");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("collision_prob: probabilities do not sum to 1");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    double col_mass = 0.0;
    double col_sq = 0.0;
    for (const auto& row : joint) {
      col_mass += row[c];
      col_sq += row[c] * row[c];
    }
    num += col_sq;
    den += col_mass * col_mass;
  }
  if (den == 0.0) throw std::invalid_argument("collision_prob: zero mass");
  return num / den;
}

ConfmrAnalysis analyze_confmr(const BiometricDataset& ds, const SketchParams& params,
                              int bins, double global_k_star_fraction,
                              double bin_k_star_fraction) {
  if (bins < 3) throw std::invalid_argument("confmr analysis: need at least 3 bins");
  const PairStats stats = impostor_pair_stats(ds, params);

  std::vector<double> all_scales = stats.scales;
  std::sort(all_scales.begin(), all_scales.end());
  const auto global_k_star = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(
             global_k_star_fraction * static_cast<double>(all_scales.size()))));

  ConfmrAnalysis out;
  out.global_fit = eva_fit(std::move(all_scales), stats.scales.size(), global_k_star);
  out.bins = bin_and_fit(stats, bins, bin_k_star_fraction);
  out.ttest = t_test(out.bins.midpoints(), out.bins.per_bin_estimates);
  return out;
}

std::vector<DetSweepRow> det_sweep(const BiometricDataset& ds, int n,
                                   std::span<const double> d_values, int m,
                                   const Bignum& modulus, const DetSweepOptions& options) {
  if (ds.n != n) throw std::invalid_argument("det_sweep: dataset dimension mismatch");
  if (m < 1) throw std::invalid_argument("det_sweep: m must be >= 1");
  std::vector<DetSweepRow> rows;
  rows.reserve(d_values.size());
  for (const double d : d_values) {
    const TriangularLattice lat(n, d);
    const SketchParams params =
        setup(FuzzyKeySetting(lat, modulus), modulus,
              options.seed + "/d=" + std::to_string(d));
    const double fnmr = estimate_fnmr(ds, lat);
    const ConfmrAnalysis analysis = analyze_confmr(
        ds, params, options.bins, options.global_k_star_fraction,
        options.bin_k_star_fraction);
    DetSweepRow row;
    row.d = d;
    row.fnmr_m = 1.0 - std::pow(1.0 - fnmr, static_cast<double>(m));
    row.confmr_m = std::pow(analysis.global_fit.estimate_at_1, static_cast<double>(m));
    row.p_value = analysis.ttest.p_value;
    row.r_corr = analysis.ttest.r_corr;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fsig
