#include "fsig/linear_sketch.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fsig/errors.hpp"

namespace fsig {

UniversalHash::UniversalHash(std::vector<Bignum> key, Bignum p)
    : u_(std::move(key)), p_(std::move(p)) {
  if (u_.empty()) throw std::invalid_argument("universal hash: empty key");
  if (p_ < 2) throw std::invalid_argument("universal hash: modulus must be >= 2");
  for (auto& e : u_) {
    e %= p_;
    if (e < 0) e += p_;
  }
}

UniversalHash UniversalHash::sample(int n, const Bignum& p, Rng& rng) {
  const int bits = static_cast<int>(mpz_sizeinbase(p.get_mpz_t(), 2));
  const int width = (bits + 7) / 8;
  const int excess = width * 8 - bits;
  std::vector<Bignum> key;
  key.reserve(n);
  Bytes buf(static_cast<std::size_t>(width));
  for (int i = 0; i < n; ++i) {
    while (true) {
      rng.fill_bytes(buf.data(), buf.size());
      buf[0] &= static_cast<unsigned char>(0xff >> excess);
      Bignum v = bytes_to_bignum(buf);
      if (v < p) {
        key.push_back(std::move(v));
        break;
      }
    }
  }
  return UniversalHash(std::move(key), p);
}

Scalar UniversalHash::operator()(std::span<const std::int64_t> coords) const {
  if (coords.size() != u_.size()) {
    throw std::invalid_argument("universal hash: dimension mismatch");
  }
  Bignum acc = 0;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    acc += u_[i] * coords[i];
  }
  acc %= p_;
  if (acc < 0) acc += p_;
  return {acc};
}

SketchParams::SketchParams(std::vector<TriangularLattice> blocks, Bignum p,
                           UniversalHash uh)
    : blocks_(std::move(blocks)), p_(std::move(p)), uh_(std::move(uh)) {
  if (blocks_.empty()) throw std::invalid_argument("sketch params: no lattice blocks");
  n_ = 0;
  for (const auto& b : blocks_) n_ += b.dim();
  if (uh_.dim() != n_) {
    throw std::invalid_argument("sketch params: hash dimension mismatch");
  }
  if (uh_.modulus() != p_) {
    throw std::invalid_argument("sketch params: hash modulus mismatch");
  }
}

nlohmann::json SketchParams::to_json() const {
  nlohmann::json jblocks = nlohmann::json::array();
  for (const auto& b : blocks_) {
    jblocks.push_back({{"n", b.dim()}, {"d", b.basis_length()}});
  }
  nlohmann::json ju = nlohmann::json::array();
  for (const auto& e : uh_.key()) ju.push_back(e.get_str());
  return nlohmann::json{{"n", n_},
                        {"d", blocks_.front().basis_length()},
                        {"p", p_.get_str()},
                        {"u", std::move(ju)},
                        {"blocks", std::move(jblocks)}};
}

SketchParams SketchParams::from_json(const nlohmann::json& j) {
  try {
    const Bignum p(j.at("p").get<std::string>(), 10);
    std::vector<TriangularLattice> blocks;
    if (j.contains("blocks") && !j.at("blocks").empty()) {
      for (const auto& jb : j.at("blocks")) {
        blocks.emplace_back(jb.at("n").get<int>(), jb.at("d").get<double>());
      }
    } else {
      blocks.emplace_back(j.at("n").get<int>(), j.at("d").get<double>());
    }
    std::vector<Bignum> key;
    for (const auto& ju : j.at("u")) key.emplace_back(ju.get<std::string>(), 10);
    return SketchParams(std::move(blocks), p, UniversalHash(std::move(key), p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sketch params json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("sketch params json: ") + e.what());
  }
}

SketchParams setup(const FuzzyKeySetting& fks, const Bignum& p, std::string_view seed) {
  if (fks.p != p) throw std::invalid_argument("setup: modulus differs from fuzzy key setting");
  Rng rng(seed, "sketch.uh");
  return SketchParams(fks.blocks, p, UniversalHash::sample(fks.dim(), p, rng));
}

SketchParams compose(std::span<const FuzzyKeySetting> settings, const Bignum& p,
                     std::string_view seed) {
  if (settings.empty()) throw std::invalid_argument("compose: no settings");
  std::vector<TriangularLattice> blocks;
  for (const auto& s : settings) {
    if (s.p != p) throw std::invalid_argument("compose: mixed moduli");
    blocks.insert(blocks.end(), s.blocks.begin(), s.blocks.end());
  }
  return setup(FuzzyKeySetting(std::move(blocks), p), p, seed);
}

namespace {

// Per-block floor coordinates of x, with the support window [0, p)^n
// enforced when `check_support` is set.
std::vector<std::int64_t> floor_coords(const SketchParams& params,
                                       const Eigen::VectorXd& x, bool check_support) {
  if (x.size() != params.dim()) throw std::invalid_argument("sketch: dimension mismatch");
  std::vector<std::int64_t> coords;
  coords.reserve(params.dim());
  int off = 0;
  for (const auto& block : params.blocks()) {
    const Eigen::VectorXd t = block.to_basis_coords(x.segment(off, block.dim()));
    for (int i = 0; i < block.dim(); ++i) {
      const std::int64_t z = snapped_floor(t[i]);
      if (check_support && (z < 0 || Bignum(static_cast<long>(z)) >= params.p())) {
        throw SupportError("sketch: basis coordinates leave the support [0,p)^n");
      }
      coords.push_back(z);
    }
    off += block.dim();
  }
  return coords;
}

Eigen::VectorXd subtract_lattice_point(const SketchParams& params,
                                       const Eigen::VectorXd& x,
                                       std::span<const std::int64_t> coords) {
  Eigen::VectorXd c(x.size());
  int off = 0;
  for (const auto& block : params.blocks()) {
    Eigen::VectorXd z(block.dim());
    for (int i = 0; i < block.dim(); ++i) z[i] = static_cast<double>(coords[off + i]);
    c.segment(off, block.dim()) =
        x.segment(off, block.dim()) - block.basis() * z;
    off += block.dim();
  }
  return c;
}

}  // namespace

SketchPair sketch(const SketchParams& params, const Eigen::VectorXd& x) {
  const auto coords = floor_coords(params, x, /*check_support=*/true);
  SketchPair out;
  out.c = subtract_lattice_point(params, x, coords);
  out.a = params.uh()(coords);
  return out;
}

Scalar diff_rec(const SketchParams& params, const Eigen::VectorXd& c,
                const Eigen::VectorXd& c_tilde) {
  if (c.size() != params.dim() || c_tilde.size() != params.dim()) {
    throw std::invalid_argument("diff_rec: dimension mismatch");
  }
  const Eigen::VectorXd diff = c - c_tilde;
  std::vector<std::int64_t> coords;
  coords.reserve(params.dim());
  int off = 0;
  for (const auto& block : params.blocks()) {
    const LatticePoint part = closest_vector(block, diff.segment(off, block.dim()));
    coords.insert(coords.end(), part.coords.begin(), part.coords.end());
    off += block.dim();
  }
  return params.uh()(coords);
}

MSketchResult m_sketch(const SketchParams& params, const Eigen::VectorXd& c,
                       const Eigen::VectorXd& e) {
  if (e.size() != params.dim()) throw std::invalid_argument("m_sketch: dimension mismatch");
  const Eigen::VectorXd shifted = c + e;
  const auto coords = floor_coords(params, shifted, /*check_support=*/false);
  // A shift of p or more cells guarantees that x + e leaves [0,p)^n for
  // every x consistent with c; flag instead of wrapping mod p.
  for (const auto z : coords) {
    Bignum mag(static_cast<long>(z < 0 ? -z : z));
    if (mag >= params.p()) {
      throw SupportError("m_sketch: shift leaves the support for every possible input");
    }
  }
  MSketchResult out;
  out.c_prime = subtract_lattice_point(params, shifted, coords);
  out.delta_a = params.uh()(coords);
  return out;
}

bool in_acceptance_region(const SketchParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_prime) {
  if (x.size() != params.dim() || x_prime.size() != params.dim()) {
    throw std::invalid_argument("in_acceptance_region: dimension mismatch");
  }
  const Eigen::VectorXd diff = x - x_prime;
  int off = 0;
  for (const auto& block : params.blocks()) {
    if (!closest_vector(block, diff.segment(off, block.dim())).is_zero()) return false;
    off += block.dim();
  }
  return true;
}

double entry_scale(const SketchParams& params, const Eigen::VectorXd& v) {
  if (v.size() != params.dim()) throw std::invalid_argument("entry_scale: dimension mismatch");
  double scale = 0.0;
  int off = 0;
  for (const auto& block : params.blocks()) {
    const Eigen::VectorXd slice = v.segment(off, block.dim());
    if (!slice.isZero(0.0)) {
      scale = std::max(scale, entry_scale(block, slice));
    }
    off += block.dim();
  }
  return scale;
}

Bytes encode_sketch(const Eigen::VectorXd& c) {
  Bytes out;
  out.reserve(static_cast<std::size_t>(c.size()) * 4);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    put_f32_le(out, static_cast<float>(c[i]));
  }
  return out;
}

Eigen::VectorXd decode_sketch(std::span<const unsigned char> in, int n) {
  if (in.size() != static_cast<std::size_t>(n) * 4) {
    throw FormatError("sketch decode: wrong length");
  }
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    c[i] = static_cast<double>(get_f32_le(in, static_cast<std::size_t>(i) * 4));
  }
  return c;
}

}  // namespace fsig
