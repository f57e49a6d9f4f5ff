#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fsig {

// Integer coordinates z of a lattice point y = B z.
struct LatticePoint {
  std::vector<std::int64_t> coords;

  bool is_zero() const {
    for (auto v : coords)
      if (v != 0) return false;
    return true;
  }
  bool operator==(const LatticePoint&) const = default;
};

// Lattice whose basis vectors all have length d and pairwise inner products
// d^2/2.  The basis is the (upper-triangular) Cholesky factor of that Gram
// matrix, so construction is deterministic and results are reproducible.
class TriangularLattice {
 public:
  TriangularLattice(int n, double d);

  int dim() const { return n_; }
  double basis_length() const { return d_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& basis_inverse() const { return basis_inverse_; }

  Eigen::VectorXd to_basis_coords(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_coords(const LatticePoint& z) const;

 private:
  int n_;
  double d_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd basis_inverse_;
};

// Nearest lattice point in Euclidean norm, O(n log n) per call via the
// sort-and-threshold scan over the fundamental cell.  Distance ties (within
// 1e-12 * d) resolve to the lexicographically smallest coordinate vector.
LatticePoint closest_vector(const TriangularLattice& lat, const Eigen::VectorXd& x);

// g_L(x) = B floor(B^-1 x).  Coordinates within 1e-9 of an integer are
// snapped before flooring so that representation noise cannot move a point
// across a cell boundary.
LatticePoint floor_map(const TriangularLattice& lat, const Eigen::VectorXd& x);

// x' in AR(x)  <=>  CV(x - x') = 0.  Membership depends only on x - x'.
bool in_acceptance_region(const TriangularLattice& lat, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_prime);

// Smallest w > 0 with v/w inside the Voronoi cell of 0, found by bisection
// (the cell is convex, so membership is monotone in w).  Terminates at
// relative width 1e-9.
double entry_scale(const TriangularLattice& lat, const Eigen::VectorXd& v);

// Lattices outside the triangular family: the cubic comparison baseline
// d*I_n, block-diagonal compositions of triangular blocks, and arbitrary
// bases handled by bounded enumeration (test oracle, dimension <= 10).
class GenericLattice {
 public:
  static GenericLattice cubic(int n, double d);
  static GenericLattice block_triangular(std::vector<TriangularLattice> blocks);
  static GenericLattice from_basis(const Eigen::MatrixXd& basis);

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& basis_inverse() const { return basis_inverse_; }

  friend LatticePoint closest_vector(const GenericLattice& lat, const Eigen::VectorXd& x);

 private:
  enum class Kind { kCubic, kBlockTriangular, kGeneral };
  GenericLattice() = default;

  Kind kind_ = Kind::kGeneral;
  double d_ = 0.0;  // cubic spacing
  std::vector<TriangularLattice> blocks_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd basis_inverse_;
};

LatticePoint closest_vector(const GenericLattice& lat, const Eigen::VectorXd& x);

// Floor with the 1e-9 integer snap shared by floor_map and the sketch.
std::int64_t snapped_floor(double t);

}  // namespace fsig
