#include "fsig/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsig {

namespace {

constexpr double kSnapTol = 1e-9;
// Beyond this magnitude the spacing between adjacent doubles exceeds one
// lattice cell, so coordinate arithmetic would be meaningless anyway.
constexpr double kCoordLimit = 4.6e18;  // ~2^62

void check_finite(const Eigen::VectorXd& x, const char* what) {
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace

std::int64_t snapped_floor(double t) {
  // Negated comparison also catches NaN.
  if (!(std::abs(t) <= kCoordLimit)) {
    throw std::invalid_argument("lattice coordinate magnitude exceeds representable range");
  }
  const double r = std::nearbyint(t);
  if (std::abs(t - r) <= kSnapTol) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(t));
}

TriangularLattice::TriangularLattice(int n, double d) : n_(n), d_(d) {
  if (n < 1) throw std::invalid_argument("triangular lattice: dimension must be >= 1");
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw std::invalid_argument("triangular lattice: basis length must be positive");
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(n, n, d * d / 2.0);
  gram.diagonal().setConstant(d * d);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("triangular lattice: Gram factorization failed");
  }
  // Columns of B are the basis vectors; B^T B equals the Gram matrix.
  basis_ = Eigen::MatrixXd(llt.matrixL()).transpose();
  basis_inverse_ = basis_.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(n, n));
}

Eigen::VectorXd TriangularLattice::to_basis_coords(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw std::invalid_argument("lattice: dimension mismatch");
  return basis_inverse_ * x;
}

Eigen::VectorXd TriangularLattice::from_coords(const LatticePoint& z) const {
  if (static_cast<int>(z.coords.size()) != n_) {
    throw std::invalid_argument("lattice: dimension mismatch");
  }
  Eigen::VectorXd t(n_);
  for (int i = 0; i < n_; ++i) t[i] = static_cast<double>(z.coords[i]);
  return basis_ * t;
}

LatticePoint closest_vector(const TriangularLattice& lat, const Eigen::VectorXd& x) {
  check_finite(x, "closest_vector");
  const int n = lat.dim();
  const Eigen::VectorXd t = lat.to_basis_coords(x);

  LatticePoint result;
  result.coords.resize(n);
  Eigen::VectorXd frac(n);
  for (int i = 0; i < n; ++i) {
    const std::int64_t z = snapped_floor(t[i]);
    result.coords[i] = z;
    frac[i] = std::max(0.0, t[i] - static_cast<double>(z));
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&frac](int a, int b) { return frac[a] < frac[b]; });

  // With G = d^2/2 (I + J) the squared distance of the k-th threshold
  // candidate reduces to d^2/2 * (S1^2 + S2) where S1 and S2 are the sum and
  // sum of squares of the residuals.  Prefix sums give every candidate in
  // O(n) total.
  std::vector<double> pref_sq(n + 1, 0.0);   // sum of f^2 over the k smallest
  std::vector<double> suff_sq(n + 1, 0.0);   // sum of (f-1)^2 over ranks > k
  double frac_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double f = frac[order[k]];
    pref_sq[k + 1] = pref_sq[k] + f * f;
    frac_sum += f;
  }
  for (int k = n - 1; k >= 0; --k) {
    const double g = frac[order[k]] - 1.0;
    suff_sq[k] = suff_sq[k + 1] + g * g;
  }

  const double d = lat.basis_length();
  const double half_d2 = 0.5 * d * d;
  double best_dist = std::numeric_limits<double>::infinity();
  int best_k = 0;
  const double tie_tol = 1e-12 * d;
  for (int k = 0; k <= n; ++k) {
    const double s1 = frac_sum - static_cast<double>(n - k);
    const double s2 = pref_sq[k] + suff_sq[k];
    const double dist = std::sqrt(half_d2 * (s1 * s1 + s2));
    // Among tied candidates the largest k is the lexicographically smallest
    // coordinate vector (it has zeros where smaller k have ones).
    if (dist < best_dist - tie_tol) {
      best_dist = dist;
      best_k = k;
    } else if (dist <= best_dist + tie_tol) {
      best_dist = std::min(best_dist, dist);
      best_k = k;
    }
  }

  for (int j = best_k; j < n; ++j) result.coords[order[j]] += 1;
  return result;
}

LatticePoint floor_map(const TriangularLattice& lat, const Eigen::VectorXd& x) {
  check_finite(x, "floor_map");
  const Eigen::VectorXd t = lat.to_basis_coords(x);
  LatticePoint z;
  z.coords.resize(lat.dim());
  for (int i = 0; i < lat.dim(); ++i) z.coords[i] = snapped_floor(t[i]);
  return z;
}

bool in_acceptance_region(const TriangularLattice& lat, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_prime) {
  if (x.size() != x_prime.size()) {
    throw std::invalid_argument("in_acceptance_region: length mismatch");
  }
  return closest_vector(lat, x - x_prime).is_zero();
}

double entry_scale(const TriangularLattice& lat, const Eigen::VectorXd& v) {
  check_finite(v, "entry_scale");
  if (v.isZero(0.0)) throw std::invalid_argument("entry_scale: zero vector");

  const auto member = [&](double w) {
    return closest_vector(lat, v / w).is_zero();
  };

  double hi = lat.basis_length();
  int guard = 0;
  while (!member(hi)) {
    hi *= 2.0;
    if (++guard > 4096) throw std::runtime_error("entry_scale: bracket search diverged");
  }
  double lo = 1e-9 * lat.basis_length();
  while (lo > 0.0 && lo < hi && member(lo)) {
    lo *= 0.5;
    if (++guard > 8192) break;  // v pathologically small; hi/lo bracket is fine
  }
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (member(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

GenericLattice GenericLattice::cubic(int n, double d) {
  if (n < 1 || !(d > 0.0)) throw std::invalid_argument("cubic lattice: bad parameters");
  GenericLattice lat;
  lat.kind_ = Kind::kCubic;
  lat.d_ = d;
  lat.basis_ = Eigen::MatrixXd::Identity(n, n) * d;
  lat.basis_inverse_ = Eigen::MatrixXd::Identity(n, n) / d;
  return lat;
}

GenericLattice GenericLattice::block_triangular(std::vector<TriangularLattice> blocks) {
  if (blocks.empty()) throw std::invalid_argument("block lattice: no blocks");
  int n = 0;
  for (const auto& b : blocks) n += b.dim();
  GenericLattice lat;
  lat.kind_ = Kind::kBlockTriangular;
  lat.basis_ = Eigen::MatrixXd::Zero(n, n);
  lat.basis_inverse_ = Eigen::MatrixXd::Zero(n, n);
  int off = 0;
  for (const auto& b : blocks) {
    lat.basis_.block(off, off, b.dim(), b.dim()) = b.basis();
    lat.basis_inverse_.block(off, off, b.dim(), b.dim()) = b.basis_inverse();
    off += b.dim();
  }
  lat.blocks_ = std::move(blocks);
  return lat;
}

GenericLattice GenericLattice::from_basis(const Eigen::MatrixXd& basis) {
  if (basis.rows() != basis.cols() || basis.rows() < 1) {
    throw std::invalid_argument("generic lattice: basis must be square");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) throw std::invalid_argument("generic lattice: singular basis");
  GenericLattice lat;
  lat.kind_ = Kind::kGeneral;
  lat.basis_ = basis;
  lat.basis_inverse_ = lu.inverse();
  const double err = (basis * lat.basis_inverse_ -
                      Eigen::MatrixXd::Identity(basis.rows(), basis.cols()))
                         .cwiseAbs()
                         .maxCoeff();
  if (err > 1e-9) throw std::invalid_argument("generic lattice: inverse check failed");
  return lat;
}

namespace {

// Round with ties toward the smaller integer, matching the lexicographic
// tie-break.
std::int64_t round_ties_down(double t) {
  if (!(std::abs(t) <= kCoordLimit)) {
    throw std::invalid_argument("lattice coordinate magnitude exceeds representable range");
  }
  return static_cast<std::int64_t>(std::ceil(t - 0.5));
}

LatticePoint brute_force_cv(const Eigen::MatrixXd& basis,
                            const Eigen::MatrixXd& basis_inverse,
                            const Eigen::VectorXd& x) {
  const int n = static_cast<int>(basis.rows());
  if (n > 10) {
    throw std::invalid_argument("brute-force closest vector: dimension > 10");
  }
  const Eigen::VectorXd t = basis_inverse * x;
  std::vector<std::int64_t> center(n);
  for (int i = 0; i < n; ++i) center[i] = round_ties_down(t[i]);

  const double scale = basis.colwise().norm().maxCoeff();
  const double tie_tol = 1e-12 * scale;

  const auto dist_at = [&](const std::vector<std::int64_t>& z) {
    Eigen::VectorXd zz(n);
    for (int i = 0; i < n; ++i) zz[i] = static_cast<double>(z[i]);
    return (x - basis * zz).norm();
  };

  // Odometer over the +-2 window; iteration order is lexicographic in z, so
  // the first candidate inside the tie band is the canonical pick.
  std::vector<std::int64_t> z(n);
  std::vector<int> step(n, 0);
  const auto reset = [&] {
    std::fill(step.begin(), step.end(), 0);
    for (int i = 0; i < n; ++i) z[i] = center[i] - 2;
  };
  const auto advance = [&]() -> bool {
    for (int i = n - 1; i >= 0; --i) {
      if (step[i] < 4) {
        ++step[i];
        ++z[i];
        for (int j = i + 1; j < n; ++j) {
          step[j] = 0;
          z[j] = center[j] - 2;
        }
        return true;
      }
    }
    return false;
  };

  reset();
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, dist_at(z));
  } while (advance());

  reset();
  do {
    if (dist_at(z) <= best + tie_tol) {
      return LatticePoint{z};
    }
  } while (advance());
  throw std::logic_error("brute-force closest vector: no candidate");  // unreachable
}

}  // namespace

LatticePoint closest_vector(const GenericLattice& lat, const Eigen::VectorXd& x) {
  check_finite(x, "closest_vector");
  if (x.size() != lat.dim()) throw std::invalid_argument("lattice: dimension mismatch");
  switch (lat.kind_) {
    case GenericLattice::Kind::kCubic: {
      LatticePoint z;
      z.coords.resize(lat.dim());
      for (int i = 0; i < lat.dim(); ++i) z.coords[i] = round_ties_down(x[i] / lat.d_);
      return z;
    }
    case GenericLattice::Kind::kBlockTriangular: {
      LatticePoint z;
      z.coords.reserve(lat.dim());
      int off = 0;
      for (const auto& b : lat.blocks_) {
        const LatticePoint part = closest_vector(b, x.segment(off, b.dim()));
        z.coords.insert(z.coords.end(), part.coords.begin(), part.coords.end());
        off += b.dim();
      }
      return z;
    }
    case GenericLattice::Kind::kGeneral:
      return brute_force_cv(lat.basis_, lat.basis_inverse_, x);
  }
  throw std::logic_error("unreachable");
}

}  // namespace fsig
