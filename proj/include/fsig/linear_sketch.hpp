#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <vector>

#include "fsig/group.hpp"
#include "fsig/lattice.hpp"

namespace fsig {

// Lattice descriptor plus the modulus bounding the data support.  A single
// biometric source is the one-block case; composed multi-source settings
// carry one block per source (block-diagonal basis overall).
struct FuzzyKeySetting {
  std::vector<TriangularLattice> blocks;
  Bignum p;

  FuzzyKeySetting(TriangularLattice lattice, Bignum modulus)
      : blocks{std::move(lattice)}, p(std::move(modulus)) {}
  FuzzyKeySetting(std::vector<TriangularLattice> lattice_blocks, Bignum modulus)
      : blocks(std::move(lattice_blocks)), p(std::move(modulus)) {}

  int dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.dim();
    return n;
  }
};

// Linear hash Z_p^n -> Z_p: inner product with a fixed key vector u.
class UniversalHash {
 public:
  UniversalHash(std::vector<Bignum> key, Bignum p);
  static UniversalHash sample(int n, const Bignum& p, Rng& rng);

  Scalar operator()(std::span<const std::int64_t> coords) const;

  int dim() const { return static_cast<int>(u_.size()); }
  const std::vector<Bignum>& key() const { return u_; }
  const Bignum& modulus() const { return p_; }

 private:
  std::vector<Bignum> u_;
  Bignum p_;
};

struct SketchPair {
  Eigen::VectorXd c;  // in the fundamental parallelepiped: B^-1 c in [0,1)^n
  Scalar a;
};

class SketchParams {
 public:
  SketchParams(std::vector<TriangularLattice> blocks, Bignum p, UniversalHash uh);

  int dim() const { return n_; }
  const Bignum& p() const { return p_; }
  const std::vector<TriangularLattice>& blocks() const { return blocks_; }
  const UniversalHash& uh() const { return uh_; }
  bool single_block() const { return blocks_.size() == 1; }

  nlohmann::json to_json() const;
  static SketchParams from_json(const nlohmann::json& j);

 private:
  std::vector<TriangularLattice> blocks_;
  Bignum p_;
  UniversalHash uh_;
  int n_;
};

SketchParams setup(const FuzzyKeySetting& fks, const Bignum& p, std::string_view seed);

// Direct product of several settings: block-diagonal basis, one universal
// hash over the concatenated coordinates.  All settings must share p.
SketchParams compose(std::span<const FuzzyKeySetting> settings, const Bignum& p,
                     std::string_view seed);

// c = x - B floor(B^-1 x), a = UH(floor(B^-1 x)).  Throws SupportError when
// B^-1 x leaves [0, p)^n.
SketchPair sketch(const SketchParams& params, const Eigen::VectorXd& x);

// Difference reconstruction.  With (c, a) = Sketch(x) and (c~, a~) =
// Sketch(x') for x' in AR(x), returns a~ - a: the first argument is the
// enrollment-side sketch, the second the signer-side one.
Scalar diff_rec(const SketchParams& params, const Eigen::VectorXd& c,
                const Eigen::VectorXd& c_tilde);

struct MSketchResult {
  Eigen::VectorXd c_prime;
  Scalar delta_a;
};

// Linearity witness: for any x with Sketch(x) = (c, a) and x + e still in
// support, Sketch(x + e) = (c', a + delta_a) exactly.
MSketchResult m_sketch(const SketchParams& params, const Eigen::VectorXd& c,
                       const Eigen::VectorXd& e);

// AR membership for the (possibly composed) setting: every block's closest
// vector of the difference slice must be zero.
bool in_acceptance_region(const SketchParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_prime);

// Gauge of the composed Voronoi cell: max over blocks of the per-block scale.
double entry_scale(const SketchParams& params, const Eigen::VectorXd& v);

// Sketch vectors travel as 4n bytes of 32-bit little-endian floats.
Bytes encode_sketch(const Eigen::VectorXd& c);
Eigen::VectorXd decode_sketch(std::span<const unsigned char> in, int n);

}  // namespace fsig
