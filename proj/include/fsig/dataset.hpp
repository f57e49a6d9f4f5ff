#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fsig/linear_sketch.hpp"

namespace fsig {

struct UserRecord {
  std::string user_id;
  Eigen::VectorXd enrollment;            // sample_idx 0
  std::vector<Eigen::VectorXd> probes;   // sample_idx >= 1, in index order
};

struct BiometricDataset {
  int n = 0;
  std::vector<UserRecord> users;

  std::size_t total_probes() const;
  // Every (enrollment of user i, probe of user j != i) pair:
  // N * (total probes - own probes) in total.
  std::size_t impostor_pair_count() const;
};

struct ImpostorPair {
  int enroll_user;
  int probe_user;
  int probe_idx;
};

// Deterministic enumeration: enrollment user, then probe user, then probe
// index.
std::vector<ImpostorPair> impostor_pairs(const BiometricDataset& ds);

// Gaussian per-user centers with Gaussian measurement noise, affinely
// recentred (never rejection) so every sample satisfies B^-1 x in [0,p)^n.
// Feature values are quantized to 32-bit floats, matching the CSV format.
struct SyntheticModel {
  FuzzyKeySetting fks;
  double user_spread;
  double noise_spread;
  std::string seed;
};

BiometricDataset generate_synthetic(const SyntheticModel& model, int n_users,
                                    int probes_per_user);

// CSV schema: header `user_id,sample_idx,f0,...,f{n-1}`; sample_idx 0 is the
// enrollment sample.  Paths ending in .gz are compressed transparently.
BiometricDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const BiometricDataset& ds, const std::string& path);

}  // namespace fsig
