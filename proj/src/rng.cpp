#include "fsig/rng.hpp"

#include <cmath>

#include "fsig/io.hpp"

namespace fsig {

Rng::Rng(std::string_view seed, std::string_view label) : gen_(0) {
  Bytes buf;
  buf.reserve(seed.size() + label.size() + 1);
  buf.insert(buf.end(), seed.begin(), seed.end());
  buf.push_back(0x1f);  // separator so ("ab","c") != ("a","bc")
  buf.insert(buf.end(), label.begin(), label.end());
  const auto digest = sha256(buf);
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | digest[i];
  gen_.seed(s);
}

Rng Rng::from_os_entropy() {
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return Rng(s);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound < 2) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * 3.14159265358979323846 * u2;
  spare_ = mag * std::sin(ang);
  has_spare_ = true;
  return mag * std::cos(ang);
}

void Rng::fill_bytes(unsigned char* out, std::size_t len) {
  std::size_t i = 0;
  while (i < len) {
    std::uint64_t v = next_u64();
    for (int b = 0; b < 8 && i < len; ++b, ++i) {
      out[i] = static_cast<unsigned char>(v & 0xff);
      v >>= 8;
    }
  }
}

}  // namespace fsig
