#pragma once

#include <gmpxx.h>

#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string_view>
#include <vector>

#include "fsig/io.hpp"
#include "fsig/rng.hpp"

namespace fsig {

using Bignum = mpz_class;

struct Scalar {
  Bignum value;  // reduced into [0, p)
  bool operator==(const Scalar&) const = default;
};

struct GroupElement {
  Bignum value;  // in [1, q), member of the order-p subgroup
  bool operator==(const GroupElement&) const = default;
};

// Prime-order cyclic group realized as the order-p subgroup of Z_q^* with
// q = c*p + 1.  Only the abstract group interface is relied on elsewhere, so
// swapping in a different realization would not disturb the scheme logic.
class GroupParams {
 public:
  // Deterministic parameter search: sample a bits_p-bit prime p from the
  // seeded generator, take the smallest cofactor c >= 2 with q = c*p + 1
  // prime, and the smallest h >= 2 with g = h^c != 1.
  static GroupParams generate(int bits_p, std::string_view seed);

  // Validates primality (Miller-Rabin, error < 2^-80), p | q-1, g != 1 and
  // g^p = 1 before accepting externally supplied values.
  static GroupParams from_values(const Bignum& p, const Bignum& q, const Bignum& g);

  static GroupParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const Bignum& p() const { return p_; }
  const Bignum& q() const { return q_; }
  GroupElement generator() const { return {g_}; }

  int p_bits() const { return p_bits_; }
  int scalar_bytes() const { return (p_bits_ + 7) / 8; }
  int element_bytes() const { return (q_bits_ + 7) / 8; }

  GroupElement exp(const GroupElement& base, const Scalar& e) const;
  GroupElement mul(const GroupElement& a, const GroupElement& b) const;
  GroupElement identity() const { return {Bignum(1)}; }

  Scalar reduce(const Bignum& v) const;
  Scalar add(const Scalar& a, const Scalar& b) const;
  Scalar sub(const Scalar& a, const Scalar& b) const;
  Scalar mul(const Scalar& a, const Scalar& b) const;
  Scalar neg(const Scalar& a) const;

  Scalar random_scalar(Rng& rng) const;

  // Random-oracle stand-in with image Z_p: a length-prefixed encoding of the
  // domain tag and each part is digested with SHA-256 in counter mode,
  // expanded to >= 2 * p_bits bits and reduced mod p.
  Scalar hash_to_scalar(std::string_view domain_tag,
                        std::span<const Bytes> parts) const;

  // Fixed-width big-endian encodings; decode rejects wrong lengths and
  // out-of-range values.
  Bytes encode(const Scalar& s) const;
  Bytes encode(const GroupElement& e) const;
  Scalar decode_scalar(std::span<const unsigned char> in) const;
  GroupElement decode_element(std::span<const unsigned char> in) const;

  bool is_valid_element(const GroupElement& e) const;

 private:
  GroupParams(Bignum p, Bignum q, Bignum g);

  Bignum p_, q_, g_;
  int p_bits_ = 0, q_bits_ = 0;
};

bool is_probable_prime(const Bignum& n);

Bignum bytes_to_bignum(std::span<const unsigned char> in);
Bytes bignum_to_bytes(const Bignum& v, int width);

}  // namespace fsig
