#include "fsig/group.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include "fsig/errors.hpp"

using fsig::Bignum;
using fsig::Bytes;
using fsig::GroupParams;
using fsig::Scalar;

TEST_CASE("generated parameters satisfy the subgroup conditions") {
  const GroupParams params = GroupParams::generate(64, "group-test-seed");
  CHECK(fsig::is_probable_prime(params.p()));
  CHECK(fsig::is_probable_prime(params.q()));
  CHECK((params.q() - 1) % params.p() == 0);
  CHECK(params.generator().value != 1);
  CHECK(params.is_valid_element(params.generator()));
  CHECK(params.p_bits() == 64);

  SUBCASE("deterministic per seed") {
    const GroupParams again = GroupParams::generate(64, "group-test-seed");
    CHECK(again.p() == params.p());
    CHECK(again.q() == params.q());
    CHECK(again.generator().value == params.generator().value);
    const GroupParams other = GroupParams::generate(64, "another-seed");
    CHECK(other.p() != params.p());
  }
}

TEST_CASE("toy parameters p=11, q=23, g=4 import and validate") {
  const GroupParams params = GroupParams::from_values(11, 23, 4);
  CHECK(params.exp(params.generator(), Scalar{11}).value == 1);
  CHECK_THROWS_AS(GroupParams::from_values(11, 23, 1), std::invalid_argument);
  CHECK_THROWS_AS(GroupParams::from_values(12, 23, 4), std::invalid_argument);
  // 5 has order 22, not 11.
  CHECK_THROWS_AS(GroupParams::from_values(11, 23, 5), std::invalid_argument);
}

TEST_CASE("scalar arithmetic mod p") {
  const GroupParams params = GroupParams::from_values(11, 23, 4);
  CHECK(params.add(Scalar{7}, Scalar{8}).value == 4);
  CHECK(params.sub(Scalar{3}, Scalar{8}).value == 6);
  CHECK(params.mul(Scalar{7}, Scalar{8}).value == 1);
  CHECK(params.neg(Scalar{0}).value == 0);
  CHECK(params.neg(Scalar{4}).value == 7);
  CHECK(params.reduce(Bignum(-1)).value == 10);
}

TEST_CASE("exponent laws hold for random scalars") {
  const GroupParams params = GroupParams::generate(48, "exp-laws");
  fsig::Rng rng("exp-laws-draws");
  const auto g = params.generator();
  CHECK(params.exp(g, Scalar{0}).value == 1);
  for (int i = 0; i < 1000; ++i) {
    const Scalar a = params.random_scalar(rng);
    const Scalar b = params.random_scalar(rng);
    CHECK(params.mul(params.exp(g, a), params.exp(g, b)) ==
          params.exp(g, params.add(a, b)));
    CHECK(params.exp(params.exp(g, a), b) == params.exp(g, params.mul(a, b)));
  }
}

TEST_CASE("hash_to_scalar") {
  const GroupParams params = GroupParams::generate(64, "hash-test");
  const Bytes one = {'a', 'b'};
  const Bytes two = {'c'};
  const std::array<Bytes, 2> split_ab_c = {one, two};
  const std::array<Bytes, 2> split_a_bc = {Bytes{'a'}, Bytes{'b', 'c'}};

  const Scalar h1 = params.hash_to_scalar("tag", split_ab_c);
  SUBCASE("deterministic") {
    CHECK(params.hash_to_scalar("tag", split_ab_c) == h1);
  }
  SUBCASE("in range") {
    CHECK(h1.value >= 0);
    CHECK(h1.value < params.p());
  }
  SUBCASE("part boundaries matter") {
    CHECK(params.hash_to_scalar("tag", split_a_bc) != h1);
  }
  SUBCASE("domain tag matters") {
    CHECK(params.hash_to_scalar("tag2", split_ab_c) != h1);
  }
}

TEST_CASE("encoding round-trips are byte exact") {
  const GroupParams params = GroupParams::generate(75, "encode-test");
  CHECK(params.scalar_bytes() == 10);  // ceil(75/8)
  fsig::Rng rng("encode-draws");
  for (int i = 0; i < 200; ++i) {
    const Scalar s = params.random_scalar(rng);
    const Bytes enc = params.encode(s);
    CHECK(enc.size() == 10);
    CHECK(params.decode_scalar(enc) == s);
    CHECK(params.encode(params.decode_scalar(enc)) == enc);

    const auto e = params.exp(params.generator(), s);
    const Bytes enc_e = params.encode(e);
    CHECK(params.decode_element(enc_e) == e);
  }
  CHECK_THROWS_AS(params.decode_scalar(Bytes(9, 0)), fsig::FormatError);
  CHECK_THROWS_AS(params.decode_scalar(params.encode(Scalar{params.p()})),
                  fsig::FormatError);
}

TEST_CASE("json export/import round-trip") {
  const GroupParams params = GroupParams::generate(64, "json-test");
  const GroupParams back = GroupParams::from_json(params.to_json());
  CHECK(back.p() == params.p());
  CHECK(back.q() == params.q());
  CHECK(back.generator().value == params.generator().value);

  nlohmann::json bad = params.to_json();
  bad["g"] = "1";
  CHECK_THROWS_AS(GroupParams::from_json(bad), fsig::FormatError);
}

TEST_CASE("generation rejects out-of-range sizes") {
  CHECK_THROWS_AS(GroupParams::generate(16, "x"), std::invalid_argument);
  CHECK_THROWS_AS(GroupParams::generate(1024, "x"), std::invalid_argument);
}
