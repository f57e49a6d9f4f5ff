#include "fsig/fuzzy_signature.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "fsig/errors.hpp"

namespace fsig {

namespace {
constexpr std::string_view kChallengeTag = "fsig.schnorr.challenge.v1";

Scalar challenge(const FSParams& params, const GroupElement& h_tilde,
                 const GroupElement& big_r, std::span<const unsigned char> message) {
  const std::array<Bytes, 3> parts = {
      params.group.encode(h_tilde), params.group.encode(big_r),
      Bytes(message.begin(), message.end())};
  return params.group.hash_to_scalar(kChallengeTag, parts);
}

// Sketches must lie in the fundamental parallelepiped (DiffRec's
// precondition).  The tolerance absorbs the 32-bit quantization of
// transported sketch vectors.
bool sketch_in_parallelepiped(const SketchParams& params, const Eigen::VectorXd& c) {
  int off = 0;
  for (const auto& block : params.blocks()) {
    const Eigen::VectorXd t = block.to_basis_coords(c.segment(off, block.dim()));
    for (int i = 0; i < block.dim(); ++i) {
      if (!(t[i] >= -1e-3 && t[i] < 1.0 + 1e-3)) return false;
    }
    off += block.dim();
  }
  return true;
}
}  // namespace

FSParams::FSParams(GroupParams g, SketchParams s)
    : group(std::move(g)), sketch_params(std::move(s)) {
  if (group.p() != sketch_params.p()) {
    throw std::invalid_argument("fs params: group order differs from sketch modulus");
  }
}

nlohmann::json FSParams::to_json() const {
  return nlohmann::json{{"group", group.to_json()}, {"sketch", sketch_params.to_json()}};
}

FSParams FSParams::from_json(const nlohmann::json& j) {
  try {
    return FSParams(GroupParams::from_json(j.at("group")),
                    SketchParams::from_json(j.at("sketch")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fs params json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("fs params json: ") + e.what());
  }
}

FSParams fs_setup(const FuzzyKeySetting& fks, int kappa_bits, std::string_view seed) {
  GroupParams group = GroupParams::generate(kappa_bits, seed);
  if (fks.p != group.p()) {
    // The group order is what the sketch must share; rebuild the setting
    // around it.
    FuzzyKeySetting adjusted(fks.blocks, group.p());
    return FSParams(std::move(group), setup(adjusted, adjusted.p, seed));
  }
  return FSParams(group, setup(fks, group.p(), seed));
}

VerificationKey keygen(const FSParams& params, const Eigen::VectorXd& x) {
  const SketchPair pair = sketch(params.sketch_params, x);
  return VerificationKey{params.group.exp(params.group.generator(), pair.a), pair.c};
}

SignTrace sign_traced(const FSParams& params, const Eigen::VectorXd& x_prime,
                      std::span<const unsigned char> message, std::string_view rng_seed) {
  const SketchPair pair = sketch(params.sketch_params, x_prime);
  Rng rng(rng_seed, "fs.sign.r");
  SignTrace trace;
  trace.a_tilde = pair.a;
  trace.r = params.group.random_scalar(rng);
  trace.big_r = params.group.exp(params.group.generator(), trace.r);
  const GroupElement h_tilde = params.group.exp(params.group.generator(), pair.a);
  const Scalar beta = challenge(params, h_tilde, trace.big_r, message);
  trace.sig.beta = beta;
  trace.sig.z = params.group.add(params.group.mul(beta, pair.a), trace.r);
  trace.sig.c_tilde = pair.c;
  return trace;
}

FuzzySignature sign(const FSParams& params, const Eigen::VectorXd& x_prime,
                    std::span<const unsigned char> message, std::string_view rng_seed) {
  return sign_traced(params, x_prime, message, rng_seed).sig;
}

bool verify(const FSParams& params, const VerificationKey& vk,
            std::span<const unsigned char> message, const FuzzySignature& sig) {
  if (sig.beta.value < 0 || sig.beta.value >= params.group.p()) return false;
  if (sig.z.value < 0 || sig.z.value >= params.group.p()) return false;
  if (sig.c_tilde.size() != params.sketch_params.dim() || !sig.c_tilde.allFinite()) {
    return false;
  }
  if (vk.c.size() != params.sketch_params.dim() || !vk.c.allFinite()) return false;
  if (!params.group.is_valid_element(vk.h)) return false;
  if (!sketch_in_parallelepiped(params.sketch_params, sig.c_tilde) ||
      !sketch_in_parallelepiped(params.sketch_params, vk.c)) {
    return false;
  }

  const Scalar delta_a = diff_rec(params.sketch_params, vk.c, sig.c_tilde);
  const GroupElement h_tilde =
      params.group.mul(vk.h, params.group.exp(params.group.generator(), delta_a));
  const GroupElement big_r = params.group.mul(
      params.group.exp(params.group.generator(), sig.z),
      params.group.exp(h_tilde, params.group.neg(sig.beta)));
  return challenge(params, h_tilde, big_r, message) == sig.beta;
}

Bytes serialize_signature(const FSParams& params, const FuzzySignature& sig) {
  Bytes out = params.group.encode(sig.beta);
  const Bytes z = params.group.encode(sig.z);
  out.insert(out.end(), z.begin(), z.end());
  const Bytes c = encode_sketch(sig.c_tilde);
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

FuzzySignature deserialize_signature(const FSParams& params,
                                     std::span<const unsigned char> in) {
  const std::size_t sb = static_cast<std::size_t>(params.group.scalar_bytes());
  const std::size_t n = static_cast<std::size_t>(params.sketch_params.dim());
  if (in.size() != 2 * sb + 4 * n) {
    throw FormatError("signature: wrong length (" + std::to_string(in.size()) +
                      " bytes, expected " + std::to_string(2 * sb + 4 * n) + ")");
  }
  FuzzySignature sig;
  // Value-level range checks are left to verify(): a mutated-but-parseable
  // signature must reject, not error.
  sig.beta.value = bytes_to_bignum(in.subspan(0, sb));
  sig.z.value = bytes_to_bignum(in.subspan(sb, sb));
  sig.c_tilde = decode_sketch(in.subspan(2 * sb), static_cast<int>(n));
  return sig;
}

nlohmann::json vk_to_json(const FSParams& params, const VerificationKey& vk) {
  (void)params;
  return nlohmann::json{{"h", vk.h.value.get_str()},
                        {"c", base64_encode(encode_sketch(vk.c))}};
}

VerificationKey vk_from_json(const FSParams& params, const nlohmann::json& j) {
  try {
    VerificationKey vk;
    vk.h.value = Bignum(j.at("h").get<std::string>(), 10);
    vk.c = decode_sketch(base64_decode(j.at("c").get<std::string>()),
                         params.sketch_params.dim());
    return vk;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("verification key json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("verification key json: ") + e.what());
  }
}

CorrectnessTrialResult delta_correctness_trial(const FSParams& params,
                                               const VectorSampler& data_sampler,
                                               const VectorSampler& error_sampler,
                                               int trials, std::string_view seed) {
  CorrectnessTrialResult result;
  result.trials = trials;
  Rng rng(seed, "fs.delta-correctness");
  const Bytes message = {'d', 'e', 'l', 't', 'a'};
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd x = data_sampler(rng);
    const Eigen::VectorXd e = error_sampler(rng);
    const VerificationKey vk = keygen(params, x);
    const std::string sign_seed = std::string(seed) + ".sign." + std::to_string(t);
    const FuzzySignature sig = sign(params, x + e, message, sign_seed);
    const bool ok = verify(params, vk, message, sig);
    const bool in_ar = in_acceptance_region(params.sketch_params, x, x + e);
    if (!ok) ++result.failures;
    if (!in_ar) ++result.ar_violations;
  }
  result.failure_rate = trials > 0 ? static_cast<double>(result.failures) / trials : 0.0;
  return result;
}

}  // namespace fsig
