#pragma once

#include <functional>
#include <nlohmann/json_fwd.hpp>

#include "fsig/group.hpp"
#include "fsig/linear_sketch.hpp"

namespace fsig {

// Schnorr over a proxy key extracted by the linear sketch.  The signature is
// (beta, z, c~): a Schnorr signature under the ephemeral key g^a~ plus the
// sketch needed to reconstruct a~ - a at verification time.
struct FSParams {
  GroupParams group;
  SketchParams sketch_params;

  FSParams(GroupParams g, SketchParams s);

  nlohmann::json to_json() const;
  static FSParams from_json(const nlohmann::json& j);
};

struct VerificationKey {
  GroupElement h;     // g^a
  Eigen::VectorXd c;  // enrollment sketch
};

struct FuzzySignature {
  Scalar beta;
  Scalar z;
  Eigen::VectorXd c_tilde;
};

FSParams fs_setup(const FuzzyKeySetting& fks, int kappa_bits, std::string_view seed);

VerificationKey keygen(const FSParams& params, const Eigen::VectorXd& x);

FuzzySignature sign(const FSParams& params, const Eigen::VectorXd& x_prime,
                    std::span<const unsigned char> message, std::string_view rng_seed);

// Intermediate values exposed for the algebra checks in tests.
struct SignTrace {
  FuzzySignature sig;
  Scalar r;
  Scalar a_tilde;
  GroupElement big_r;  // g^r
};
SignTrace sign_traced(const FSParams& params, const Eigen::VectorXd& x_prime,
                      std::span<const unsigned char> message, std::string_view rng_seed);

// Semantic failures (wrong hash, out-of-range or non-finite fields) reject;
// only structurally unreadable inputs throw, at the deserialization layer.
bool verify(const FSParams& params, const VerificationKey& vk,
            std::span<const unsigned char> message, const FuzzySignature& sig);

// beta || z (fixed-width big-endian scalars) || c~ (4n float32 LE bytes).
Bytes serialize_signature(const FSParams& params, const FuzzySignature& sig);
FuzzySignature deserialize_signature(const FSParams& params,
                                     std::span<const unsigned char> in);

nlohmann::json vk_to_json(const FSParams& params, const VerificationKey& vk);
VerificationKey vk_from_json(const FSParams& params, const nlohmann::json& j);

using VectorSampler = std::function<Eigen::VectorXd(Rng&)>;

struct CorrectnessTrialResult {
  int trials = 0;
  int failures = 0;       // sign-then-verify rejected
  int ar_violations = 0;  // x + e left AR(x)
  double failure_rate = 0.0;
};

// Runs `trials` rounds of keygen(x), sign(x + e), verify and counts failures
// next to the geometric AR oracle evaluated on the same draws.  Failures can
// come only from AR violations, so the two counts must agree.
CorrectnessTrialResult delta_correctness_trial(const FSParams& params,
                                               const VectorSampler& data_sampler,
                                               const VectorSampler& error_sampler,
                                               int trials, std::string_view seed);

}  // namespace fsig
