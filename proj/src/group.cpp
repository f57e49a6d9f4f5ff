#include "fsig/group.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fsig/errors.hpp"

namespace fsig {

namespace {

// 40 Miller-Rabin rounds: error probability below 4^-40 = 2^-80.
constexpr int kPrimalityReps = 40;

void append_u32_be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

void append_length_prefixed(Bytes& out, std::span<const unsigned char> data) {
  const std::uint64_t len = data.size();
  for (int i = 7; i >= 0; --i) {
    out.push_back(static_cast<unsigned char>((len >> (8 * i)) & 0xff));
  }
  out.insert(out.end(), data.begin(), data.end());
}

}  // namespace

bool is_probable_prime(const Bignum& n) {
  if (n < 2) return false;
  return mpz_probab_prime_p(n.get_mpz_t(), kPrimalityReps) > 0;
}

Bignum bytes_to_bignum(std::span<const unsigned char> in) {
  Bignum v;
  if (!in.empty()) {
    mpz_import(v.get_mpz_t(), in.size(), 1 /*msb first*/, 1, 0, 0, in.data());
  }
  return v;
}

Bytes bignum_to_bytes(const Bignum& v, int width) {
  Bytes out(static_cast<std::size_t>(width), 0);
  if (v == 0) return out;
  const std::size_t needed = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (needed > static_cast<std::size_t>(width)) {
    throw std::invalid_argument("bignum_to_bytes: value too large for width");
  }
  std::size_t written = 0;
  mpz_export(out.data() + (width - needed), &written, 1, 1, 0, 0, v.get_mpz_t());
  return out;
}

GroupParams::GroupParams(Bignum p, Bignum q, Bignum g)
    : p_(std::move(p)), q_(std::move(q)), g_(std::move(g)) {
  p_bits_ = static_cast<int>(mpz_sizeinbase(p_.get_mpz_t(), 2));
  q_bits_ = static_cast<int>(mpz_sizeinbase(q_.get_mpz_t(), 2));
}

GroupParams GroupParams::generate(int bits_p, std::string_view seed) {
  if (bits_p < 32 || bits_p > 512) {
    throw std::invalid_argument("group generation: bits_p must be in [32, 512]");
  }
  Rng rng(seed, "group.prime");

  Bignum p;
  const Bignum lower = Bignum(1) << (bits_p - 1);
  const Bignum upper = Bignum(1) << bits_p;
  bool found_p = false;
  for (int attempt = 0; attempt < 1000 && !found_p; ++attempt) {
    Bytes buf((bits_p + 7) / 8);
    rng.fill_bytes(buf.data(), buf.size());
    Bignum candidate = bytes_to_bignum(buf);
    candidate |= lower;           // exact bit length
    candidate |= 1;               // odd
    candidate &= upper - 1;
    while (candidate < upper) {
      if (is_probable_prime(candidate)) {
        p = candidate;
        found_p = true;
        break;
      }
      candidate += 2;
    }
  }
  if (!found_p) throw std::runtime_error("group generation: prime search failed");

  Bignum q;
  unsigned long cofactor = 0;
  for (unsigned long c = 2; c <= 1000000; ++c) {
    Bignum candidate = p * c + 1;
    if (is_probable_prime(candidate)) {
      q = candidate;
      cofactor = c;
      break;
    }
  }
  if (cofactor == 0) throw std::runtime_error("group generation: cofactor search failed");

  Bignum g;
  for (unsigned long h = 2; h < 1000; ++h) {
    Bignum candidate;
    mpz_powm_ui(candidate.get_mpz_t(), Bignum(h).get_mpz_t(), cofactor, q.get_mpz_t());
    if (candidate != 1) {
      g = candidate;
      break;
    }
  }
  if (g == 0) throw std::runtime_error("group generation: generator search failed");

  return from_values(p, q, g);
}

GroupParams GroupParams::from_values(const Bignum& p, const Bignum& q, const Bignum& g) {
  if (!is_probable_prime(p)) throw std::invalid_argument("group: p is not prime");
  if (!is_probable_prime(q)) throw std::invalid_argument("group: q is not prime");
  if ((q - 1) % p != 0) throw std::invalid_argument("group: p does not divide q-1");
  if (g <= 1 || g >= q) throw std::invalid_argument("group: generator out of range");
  Bignum check;
  mpz_powm(check.get_mpz_t(), g.get_mpz_t(), p.get_mpz_t(), q.get_mpz_t());
  if (check != 1) throw std::invalid_argument("group: generator order does not divide p");
  return GroupParams(p, q, g);
}

GroupParams GroupParams::from_json(const nlohmann::json& j) {
  try {
    const Bignum p(j.at("p").get<std::string>(), 10);
    const Bignum q(j.at("q").get<std::string>(), 10);
    const Bignum g(j.at("g").get<std::string>(), 10);
    return from_values(p, q, g);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("group params json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("group params json: ") + e.what());
  }
}

nlohmann::json GroupParams::to_json() const {
  return nlohmann::json{{"p", p_.get_str()}, {"q", q_.get_str()}, {"g", g_.get_str()}};
}

GroupElement GroupParams::exp(const GroupElement& base, const Scalar& e) const {
  GroupElement out;
  mpz_powm(out.value.get_mpz_t(), base.value.get_mpz_t(), e.value.get_mpz_t(),
           q_.get_mpz_t());
  return out;
}

GroupElement GroupParams::mul(const GroupElement& a, const GroupElement& b) const {
  return {(a.value * b.value) % q_};
}

Scalar GroupParams::reduce(const Bignum& v) const {
  Bignum r = v % p_;
  if (r < 0) r += p_;
  return {r};
}

Scalar GroupParams::add(const Scalar& a, const Scalar& b) const {
  return reduce(a.value + b.value);
}

Scalar GroupParams::sub(const Scalar& a, const Scalar& b) const {
  return reduce(a.value - b.value);
}

Scalar GroupParams::mul(const Scalar& a, const Scalar& b) const {
  return reduce(a.value * b.value);
}

Scalar GroupParams::neg(const Scalar& a) const { return reduce(-a.value); }

Scalar GroupParams::random_scalar(Rng& rng) const {
  // Rejection sampling over p_bits-bit strings keeps the draw exactly uniform.
  const int width = scalar_bytes();
  const int excess_bits = width * 8 - p_bits_;
  Bytes buf(static_cast<std::size_t>(width));
  while (true) {
    rng.fill_bytes(buf.data(), buf.size());
    buf[0] &= static_cast<unsigned char>(0xff >> excess_bits);
    Bignum v = bytes_to_bignum(buf);
    if (v < p_) return {v};
  }
}

Scalar GroupParams::hash_to_scalar(std::string_view domain_tag,
                                   std::span<const Bytes> parts) const {
  Bytes msg;
  append_length_prefixed(
      msg, {reinterpret_cast<const unsigned char*>(domain_tag.data()), domain_tag.size()});
  for (const auto& part : parts) append_length_prefixed(msg, part);

  const int target_bits = 2 * p_bits_;
  const int blocks = (target_bits + 255) / 256;
  Bytes expanded;
  expanded.reserve(static_cast<std::size_t>(blocks) * 32);
  for (int i = 0; i < blocks; ++i) {
    Bytes block_input;
    block_input.reserve(msg.size() + 4);
    append_u32_be(block_input, static_cast<std::uint32_t>(i));
    block_input.insert(block_input.end(), msg.begin(), msg.end());
    const auto digest = sha256(block_input);
    expanded.insert(expanded.end(), digest.begin(), digest.end());
  }
  return reduce(bytes_to_bignum(expanded));
}

Bytes GroupParams::encode(const Scalar& s) const {
  return bignum_to_bytes(s.value, scalar_bytes());
}

Bytes GroupParams::encode(const GroupElement& e) const {
  return bignum_to_bytes(e.value, element_bytes());
}

Scalar GroupParams::decode_scalar(std::span<const unsigned char> in) const {
  if (in.size() != static_cast<std::size_t>(scalar_bytes())) {
    throw FormatError("scalar decode: wrong length");
  }
  Bignum v = bytes_to_bignum(in);
  if (v >= p_) throw FormatError("scalar decode: value not reduced mod p");
  return {v};
}

GroupElement GroupParams::decode_element(std::span<const unsigned char> in) const {
  if (in.size() != static_cast<std::size_t>(element_bytes())) {
    throw FormatError("group element decode: wrong length");
  }
  GroupElement e{bytes_to_bignum(in)};
  if (!is_valid_element(e)) throw FormatError("group element decode: not in subgroup");
  return e;
}

bool GroupParams::is_valid_element(const GroupElement& e) const {
  if (e.value < 1 || e.value >= q_) return false;
  Bignum check;
  mpz_powm(check.get_mpz_t(), e.value.get_mpz_t(), p_.get_mpz_t(), q_.get_mpz_t());
  return check == 1;
}

}  // namespace fsig
