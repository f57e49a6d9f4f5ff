#include "fsig/entropy.hpp"

#include <doctest.h>

#include <cmath>

#include "fsig/errors.hpp"
#include "fsig/rng.hpp"

using fsig::BiometricDataset;
using fsig::Bignum;
using fsig::FuzzyKeySetting;
using fsig::SketchParams;
using fsig::TriangularLattice;

namespace {

BiometricDataset synthetic(int n, double d, long p, double user_spread, double noise,
                           const std::string& seed, int users, int probes) {
  const fsig::SyntheticModel model{FuzzyKeySetting(TriangularLattice(n, d), Bignum(p)),
                                   user_spread, noise, seed};
  return generate_synthetic(model, users, probes);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("estimate_fnmr") {
  SUBCASE("probes equal to enrollment give zero") {
    const BiometricDataset ds = synthetic(2, 1.0, 1009, 2.0, 0.0, "z", 6, 2);
    CHECK(fsig::estimate_fnmr(ds, TriangularLattice(2, 1.0)) == 0.0);
  }

  SUBCASE("one probe outside AR out of 20 gives 0.05") {
    BiometricDataset ds;
    ds.n = 1;
    for (int u = 0; u < 10; ++u) {
      fsig::UserRecord rec;
      rec.user_id = "u" + std::to_string(u);
      rec.enrollment = Eigen::VectorXd::Constant(1, 10.0 + u);
      rec.probes.assign(2, rec.enrollment);
      ds.users.push_back(rec);
    }
    ds.users[4].probes[1][0] += 0.75;  // outside [-0.5, 0.5)
    CHECK(fsig::estimate_fnmr(ds, TriangularLattice(1, 1.0)) == doctest::Approx(0.05));
  }

  SUBCASE("matches a literal double-loop recount on random data") {
    const TriangularLattice lat(3, 1.2);
    for (int round = 0; round < 5; ++round) {
      const BiometricDataset ds =
          synthetic(3, 1.2, 10007, 1.5, 0.45, "recount-" + std::to_string(round), 12, 3);
      std::size_t outside = 0, total = 0;
      for (const auto& user : ds.users) {
        for (const auto& probe : user.probes) {
          ++total;
          if (!closest_vector(lat, user.enrollment - probe).is_zero()) ++outside;
        }
      }
      CHECK(fsig::estimate_fnmr(ds, lat) ==
            static_cast<double>(outside) / static_cast<double>(total));
    }
  }

  SUBCASE("empty dataset errors") {
    BiometricDataset ds;
    ds.n = 1;
    CHECK_THROWS_AS(fsig::estimate_fnmr(ds, TriangularLattice(1, 1.0)),
                    std::invalid_argument);
  }
}

TEST_CASE("impostor entry scales") {
  SUBCASE("single user yields an empty list") {
    const BiometricDataset one = synthetic(2, 1.0, 1009, 1.0, 0.1, "one", 2, 1);
    BiometricDataset single;
    single.n = 2;
    single.users.push_back(one.users[0]);
    const auto scales = fsig::impostor_entry_scales(single, TriangularLattice(2, 1.0));
    CHECK(scales.k_max == 0);
    CHECK(scales.scales.empty());
  }

  SUBCASE("two users with one probe each: k_max = 2") {
    const BiometricDataset ds = synthetic(2, 1.0, 1009, 1.5, 0.1, "two", 2, 1);
    const auto scales = fsig::impostor_entry_scales(ds, TriangularLattice(2, 1.0));
    CHECK(scales.k_max == 2);
    CHECK(scales.scales.size() == 2);
  }

  SUBCASE("k(w_n) = n: membership recount at each returned scale") {
    const TriangularLattice lat(2, 1.0);
    const BiometricDataset ds = synthetic(2, 1.0, 10007, 1.2, 0.3, "kw", 8, 2);
    const auto scales = fsig::impostor_entry_scales(ds, lat);
    REQUIRE(scales.k_max == ds.impostor_pair_count());

    const auto pairs = impostor_pairs(ds);
    for (std::size_t rank = 1; rank <= scales.scales.size(); rank += 7) {
      const double w = scales.scales[rank - 1] * (1 + 1e-6);
      std::size_t count = 0;
      for (const auto& pr : pairs) {
        const Eigen::VectorXd diff = ds.users[pr.enroll_user].enrollment -
                                     ds.users[pr.probe_user].probes[pr.probe_idx];
        if (closest_vector(lat, diff / w).is_zero()) ++count;
      }
      CHECK(count == rank);
    }
  }
}

TEST_CASE("tail-fit closed form") {
  SUBCASE("k*=2, w1=w2=1, cut at e gives b=0, r=1") {
    const std::vector<double> scales = {1.0, 1.0};
    const double b = fsig::eva_mle_exponent(scales, std::exp(1.0));
    CHECK(b == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("estimate formula: k*=100, k_max=1e6, w*=2, r=3") {
    // b chosen so the fitted exponent r = b+1 = 3.
    fsig::EvaFit fit;
    fit.k_star = 100;
    fit.k_max = 1000000;
    fit.w_star = 2.0;
    fit.r_exponent = 3.0;
    CHECK(fit.fitted_at(1.0) == doctest::Approx(1.25e-5).epsilon(1e-12));
  }

  SUBCASE("degenerate sample is reported") {
    const std::vector<double> scales = {2.0, 2.0};
    CHECK_THROWS_AS(fsig::eva_mle_exponent(scales, 2.0), fsig::DegenerateStatistics);
    CHECK_THROWS_AS(fsig::eva_fit({1.0, 1.0}, 10, 2), fsig::DegenerateStatistics);
  }

  SUBCASE("w* is the k*-th smallest scale") {
    const std::vector<double> scales = {0.5, 1.0, 2.0, 4.0};
    const auto fit = fsig::eva_fit(scales, 100, 3);
    CHECK(fit.w_star == 2.0);
    CHECK(fit.k_star == 3);
  }
}

TEST_CASE("tail-fit exponent recovery from power-law samples") {
  // Oracle: inverse-CDF sampling w = w* u^(1/(b0+1)) for density ~ w^b0.
  fsig::Rng rng("eva-recovery-unit");
  for (const double b0 : {1.0, 5.0}) {
    std::vector<double> scales(20000);
    for (auto& w : scales) {
      w = 3.0 * std::pow(rng.uniform(), 1.0 / (b0 + 1.0));
    }
    std::sort(scales.begin(), scales.end());
    const auto full = fsig::eva_fit(scales, scales.size(), scales.size());
    CHECK(std::abs(full.b - b0) / b0 < 0.05);
    const auto tail =
        fsig::eva_fit(scales, scales.size(), scales.size() / 100);
    CHECK(std::abs(tail.b - b0) / b0 < 0.15);
  }
}

TEST_CASE("binned estimates") {
  const Bignum p(10007);
  const FuzzyKeySetting fks(TriangularLattice(2, 1.0), p);
  const SketchParams params = setup(fks, p, "bins");
  const BiometricDataset ds = synthetic(2, 1.0, 10007, 1.3, 0.35, "bins-data", 16, 3);
  // 16 users x (48 - 3) = 720 pairs.
  REQUIRE(ds.impostor_pair_count() == 720);

  SUBCASE("M=1 degenerates to the plain tail estimate") {
    const auto binned = fsig::estimate_confmr_bins(ds, params, 1, 0.05);
    REQUIRE(binned.per_bin_estimates.size() == 1);
    const auto scales = fsig::impostor_entry_scales(ds, TriangularLattice(2, 1.0));
    const auto global = fsig::eva_fit(scales.scales, scales.k_max,
                                      static_cast<std::size_t>(std::llround(0.05 * 720)));
    CHECK(binned.per_bin_estimates[0] == doctest::Approx(global.estimate_at_1));
  }

  SUBCASE("bins hold equal pair counts +-1 and edges are sorted") {
    const auto binned = fsig::estimate_confmr_bins(ds, params, 7, 0.15);
    REQUIRE(binned.per_bin_fits.size() == 7);
    std::size_t lo = 720 / 7, hi = (720 + 6) / 7;
    for (const auto& fit : binned.per_bin_fits) {
      CHECK(fit.k_max >= lo);
      CHECK(fit.k_max <= hi);
    }
    for (std::size_t t = 1; t < binned.bin_edges.size(); ++t) {
      CHECK(binned.bin_edges[t] >= binned.bin_edges[t - 1]);
    }
    CHECK(binned.midpoints().size() == 7);
  }

  SUBCASE("under-populated bins are rejected") {
    CHECK_THROWS_AS(fsig::estimate_confmr_bins(ds, params, 20, 0.01),
                    fsig::DegenerateStatistics);
  }
}

TEST_CASE("t-test") {
  SUBCASE("r = 0 gives t = 0 and p = 1 exactly") {
    const auto result = fsig::t_test_from_r(0.0, 100);
    CHECK(result.t_stat == 0.0);
    CHECK(result.p_value == 1.0);
    CHECK(result.dof == 98);
    CHECK(result.uncorrelated_at_005);
  }

  SUBCASE("published statistics: (M=100, r=0.095) and (M=100, r=-0.015)") {
    CHECK(fsig::t_test_from_r(0.095, 100).p_value == doctest::Approx(0.35).epsilon(0.03));
    CHECK(fsig::t_test_from_r(-0.015, 100).p_value == doctest::Approx(0.89).epsilon(0.012));
  }

  SUBCASE("symmetry: p(t) = p(-t)") {
    for (const double r : {0.05, 0.3, 0.8}) {
      CHECK(fsig::t_test_from_r(r, 50).p_value ==
            doctest::Approx(fsig::t_test_from_r(-r, 50).p_value).epsilon(1e-12));
    }
  }

  SUBCASE("large dof limit matches the normal distribution within 1e-3") {
    for (const double t : {0.0, 1.0, 2.0}) {
      const double p_t = fsig::student_t_two_sided_p(t, 5e6);
      const double p_n = 2.0 * (1.0 - normal_cdf(t));
      CHECK(std::abs(p_t - p_n) <= 1e-3);
    }
  }

  SUBCASE("full path computes the correlation from (x, log estimate) pairs") {
    // y = exp(a x): log-linear with perfect correlation 1.
    std::vector<double> xs, est;
    for (int i = 0; i < 10; ++i) {
      xs.push_back(i);
      est.push_back(std::exp(0.5 * i));
    }
    const auto result = fsig::t_test(xs, est);
    CHECK(result.r_corr == doctest::Approx(1.0));
    CHECK(result.p_value <= 1e-9);
    CHECK_FALSE(result.uncorrelated_at_005);
  }

  SUBCASE("zero variance errors") {
    const std::vector<double> xs = {1.0, 1.0, 1.0};
    const std::vector<double> est = {0.5, 0.2, 0.1};
    CHECK_THROWS_AS(fsig::t_test(xs, est), fsig::DegenerateStatistics);
    const std::vector<double> xs2 = {1.0, 2.0, 3.0};
    const std::vector<double> est2 = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(fsig::t_test(xs2, est2), fsig::DegenerateStatistics);
  }

  SUBCASE("non-positive estimates cannot be logged") {
    const std::vector<double> xs = {1.0, 2.0, 3.0};
    const std::vector<double> est = {0.5, 0.0, 0.1};
    CHECK_THROWS_AS(fsig::t_test(xs, est), fsig::DegenerateStatistics);
  }
}

TEST_CASE("threshold combiners") {
  SUBCASE("m=4 at 5%: per-source bound 2^-6.29") {
    const auto split = fsig::combine_thresholds(4, 0.05, std::pow(2.0, -112));
    CHECK(std::log2(split.per_source_fnmr) == doctest::Approx(-6.29).epsilon(0.01));
    CHECK(split.per_source_confmr == std::pow(2.0, -28));
  }
  SUBCASE("m=1 leaves targets unchanged") {
    const auto split = fsig::combine_thresholds(1, 0.03, 0.25);
    CHECK(split.per_source_fnmr == doctest::Approx(0.03));
    CHECK(split.per_source_confmr == doctest::Approx(0.25));
  }
}

TEST_CASE("leftover hash bound") {
  CHECK(fsig::lhl_bound(16.0, 1.0 / 16.0) == doctest::Approx(0.5));
  CHECK(fsig::lhl_bound(1.0, 0.0) == 0.0);
  CHECK(fsig::lhl_bound(1e9, 1.0) == 1.0);  // clamped
}

TEST_CASE("collision probability") {
  SUBCASE("x deterministic given c") {
    // Each column has a single support point.
    const std::vector<std::vector<double>> joint = {{0.25, 0.0}, {0.0, 0.75}};
    CHECK(fsig::collision_prob(joint) == doctest::Approx(1.0));
  }
  SUBCASE("x uniform and independent of c") {
    const std::vector<std::vector<double>> joint = {
        {0.1, 0.15}, {0.1, 0.15}, {0.1, 0.15}, {0.1, 0.15}};
    CHECK(fsig::collision_prob(joint) == doctest::Approx(0.25));
  }
  SUBCASE("random table matches the pair-enumeration oracle") {
    fsig::Rng rng("col-oracle");
    for (int round = 0; round < 20; ++round) {
      std::vector<std::vector<double>> joint(4, std::vector<double>(4));
      double total = 0.0;
      for (auto& row : joint) {
        for (auto& v : row) {
          v = rng.uniform();
          total += v;
        }
      }
      for (auto& row : joint) {
        for (auto& v : row) v /= total;
      }
      // Pr[x=x' and c=c'] / Pr[c=c'] over independent pairs.
      double num = 0.0, den = 0.0;
      for (int x1 = 0; x1 < 4; ++x1) {
        for (int c1 = 0; c1 < 4; ++c1) {
          for (int x2 = 0; x2 < 4; ++x2) {
            for (int c2 = 0; c2 < 4; ++c2) {
              const double mass = joint[x1][c1] * joint[x2][c2];
              if (c1 == c2) {
                den += mass;
                if (x1 == x2) num += mass;
              }
            }
          }
        }
      }
      CHECK(fsig::collision_prob(joint) == doctest::Approx(num / den).epsilon(1e-12));
    }
  }
  SUBCASE("unnormalized tables are rejected") {
    CHECK_THROWS_AS(fsig::collision_prob({{0.5, 0.1}}), std::invalid_argument);
  }
}

TEST_CASE("det sweep") {
  const BiometricDataset ds = synthetic(2, 1.0, 100003, 2.5, 0.25, "det-data", 24, 3);
  const std::vector<double> d_values = {0.5, 1.0, 2.0, 4.0, 8.0};
  fsig::DetSweepOptions options;
  options.bins = 4;
  options.global_k_star_fraction = 0.05;
  options.bin_k_star_fraction = 0.1;
  const auto rows = fsig::det_sweep(ds, 2, d_values, 4, Bignum(100003), options);

  SUBCASE("one row per requested d") {
    CHECK(rows.size() == d_values.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].d == d_values[i]);
  }

  SUBCASE("FNMR is non-increasing in d (counting estimator)") {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].fnmr_m <= rows[i - 1].fnmr_m + 1e-12);
    }
  }

  SUBCASE("m=1 equals the raw estimates") {
    const auto raw = fsig::det_sweep(ds, 2, d_values, 1, Bignum(100003), options);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double fnmr = fsig::estimate_fnmr(ds, TriangularLattice(2, d_values[i]));
      CHECK(raw[i].fnmr_m == doctest::Approx(fnmr));
      CHECK(rows[i].fnmr_m == doctest::Approx(1.0 - std::pow(1.0 - fnmr, 4.0)));
      CHECK(rows[i].confmr_m == doctest::Approx(std::pow(raw[i].confmr_m, 4.0)));
    }
  }

  SUBCASE("a small-d/large-d crossing exists between error rates") {
    // With user spread well above the noise, growing d drives FNMR down and
    // the tail FMR estimate up.
    CHECK(rows.front().fnmr_m > rows.front().confmr_m);
    CHECK(rows.back().fnmr_m < rows.back().confmr_m);
  }
}

TEST_CASE("confmr analysis summary") {
  const Bignum p(100003);
  const FuzzyKeySetting fks(TriangularLattice(2, 1.1), p);
  const SketchParams params = setup(fks, p, "analysis");
  const BiometricDataset ds = synthetic(2, 1.1, 100003, 1.8, 0.3, "analysis-data", 20, 3);
  const auto analysis = fsig::analyze_confmr(ds, params, 5, 0.02, 0.1);
  CHECK(analysis.global_fit.estimate_at_1 >= 0.0);
  CHECK(analysis.global_fit.estimate_at_1 <= 1.0);
  CHECK(analysis.ttest.p_value >= 0.0);
  CHECK(analysis.ttest.p_value <= 1.0);
  CHECK(analysis.bins.per_bin_estimates.size() == 5);
  CHECK(analysis.ttest.dof == 3);
}
