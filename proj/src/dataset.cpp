#include "fsig/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fsig/errors.hpp"
#include "fsig/io.hpp"
#include "fsig/rng.hpp"

namespace fsig {

std::size_t BiometricDataset::total_probes() const {
  std::size_t count = 0;
  for (const auto& u : users) count += u.probes.size();
  return count;
}

std::size_t BiometricDataset::impostor_pair_count() const {
  const std::size_t total = total_probes();
  std::size_t count = 0;
  for (const auto& u : users) count += total - u.probes.size();
  return count;
}

std::vector<ImpostorPair> impostor_pairs(const BiometricDataset& ds) {
  std::vector<ImpostorPair> pairs;
  pairs.reserve(ds.impostor_pair_count());
  for (int i = 0; i < static_cast<int>(ds.users.size()); ++i) {
    for (int j = 0; j < static_cast<int>(ds.users.size()); ++j) {
      if (j == i) continue;
      for (int k = 0; k < static_cast<int>(ds.users[j].probes.size()); ++k) {
        pairs.push_back({i, j, k});
      }
    }
  }
  return pairs;
}

BiometricDataset generate_synthetic(const SyntheticModel& model, int n_users,
                                    int probes_per_user) {
  if (n_users < 2) throw std::invalid_argument("synthetic data: need at least 2 users");
  if (probes_per_user < 1) {
    throw std::invalid_argument("synthetic data: need at least 1 probe per user");
  }
  if (!(model.user_spread > 0.0) || !(model.noise_spread >= 0.0)) {
    throw std::invalid_argument("synthetic data: spreads must be positive");
  }
  const int n = model.fks.dim();

  Rng rng(model.seed, "synthetic");
  std::vector<std::vector<Eigen::VectorXd>> raw(n_users);
  for (int u = 0; u < n_users; ++u) {
    Eigen::VectorXd mean(n);
    for (int i = 0; i < n; ++i) mean[i] = model.user_spread * rng.normal();
    raw[u].reserve(probes_per_user + 1);
    for (int s = 0; s <= probes_per_user; ++s) {
      Eigen::VectorXd x = mean;
      if (model.noise_spread > 0.0) {
        for (int i = 0; i < n; ++i) x[i] += model.noise_spread * rng.normal();
      }
      raw[u].push_back(std::move(x));
    }
  }

  // Recentre in basis coordinates so the whole sample fits in [0,p)^n with a
  // one-cell margin on each side.
  Eigen::VectorXd tmin = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd tmax = -tmin;
  const auto to_coords = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd t(n);
    int off = 0;
    for (const auto& block : model.fks.blocks) {
      t.segment(off, block.dim()) = block.to_basis_coords(x.segment(off, block.dim()));
      off += block.dim();
    }
    return t;
  };
  const auto from_coords = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd x(n);
    int off = 0;
    for (const auto& block : model.fks.blocks) {
      x.segment(off, block.dim()) = block.basis() * t.segment(off, block.dim());
      off += block.dim();
    }
    return x;
  };
  for (const auto& samples : raw) {
    for (const auto& x : samples) {
      const Eigen::VectorXd t = to_coords(x);
      tmin = tmin.cwiseMin(t);
      tmax = tmax.cwiseMax(t);
    }
  }
  const double margin = 1.0;
  const double p_approx = mpz_get_d(model.fks.p.get_mpz_t());
  if ((tmax - tmin).maxCoeff() + 2.0 * margin >= p_approx) {
    throw SupportError("synthetic data: spread too large for the support [0,p)^n");
  }
  const Eigen::VectorXd shift = Eigen::VectorXd::Constant(n, margin) - tmin;

  BiometricDataset ds;
  ds.n = n;
  ds.users.reserve(n_users);
  char id[32];
  for (int u = 0; u < n_users; ++u) {
    UserRecord rec;
    std::snprintf(id, sizeof(id), "u%05d", u);
    rec.user_id = id;
    for (int s = 0; s <= probes_per_user; ++s) {
      Eigen::VectorXd x = from_coords(to_coords(raw[u][s]) + shift);
      for (int i = 0; i < n; ++i) x[i] = static_cast<double>(static_cast<float>(x[i]));
      if (s == 0) {
        rec.enrollment = std::move(x);
      } else {
        rec.probes.push_back(std::move(x));
      }
    }
    ds.users.push_back(std::move(rec));
  }
  return ds;
}

namespace {

bool has_gz_suffix(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

// Line-oriented text source over either a plain or a gzip stream.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : gz_(has_gz_suffix(path)) {
    if (gz_) {
      gzfile_ = gzopen(path.c_str(), "rb");
      if (!gzfile_) throw FormatError("cannot open file: " + path);
    } else {
      file_.open(path);
      if (!file_) throw FormatError("cannot open file: " + path);
    }
  }
  ~LineReader() {
    if (gzfile_) gzclose(gzfile_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line) {
    if (!gz_) return static_cast<bool>(std::getline(file_, line));
    line.clear();
    char buf[4096];
    while (true) {
      if (gzgets(gzfile_, buf, sizeof(buf)) == nullptr) return !line.empty();
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        return true;
      }
    }
  }

 private:
  bool gz_;
  std::ifstream file_;
  gzFile gzfile_ = nullptr;
};

class LineWriter {
 public:
  explicit LineWriter(const std::string& path) : gz_(has_gz_suffix(path)) {
    if (gz_) {
      gzfile_ = gzopen(path.c_str(), "wb");
      if (!gzfile_) throw FormatError("cannot write file: " + path);
    } else {
      file_.open(path, std::ios::trunc);
      if (!file_) throw FormatError("cannot write file: " + path);
    }
  }
  ~LineWriter() {
    if (gzfile_) gzclose(gzfile_);
  }
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write(const std::string& line) {
    if (gz_) {
      if (gzputs(gzfile_, line.c_str()) < 0 || gzputc(gzfile_, '\n') < 0) {
        throw FormatError("gzip write failed");
      }
    } else {
      file_ << line << '\n';
    }
  }

 private:
  bool gz_;
  std::ofstream file_;
  gzFile gzfile_ = nullptr;
};

}  // namespace

BiometricDataset read_dataset_csv(const std::string& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw FormatError(path + ": empty file");

  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "user_id" || header[1] != "sample_idx") {
    throw FormatError(path + ": malformed header (expected user_id,sample_idx,f0,...)");
  }
  const int n = static_cast<int>(header.size()) - 2;
  for (int i = 0; i < n; ++i) {
    if (header[i + 2] != "f" + std::to_string(i)) {
      throw FormatError(path + ": malformed header at feature column " + std::to_string(i));
    }
  }

  struct Sample {
    long idx;
    Eigen::VectorXd x;
  };
  std::map<std::string, std::vector<Sample>> by_user;
  std::vector<std::string> user_order;
  std::set<std::pair<std::string, long>> seen;

  std::size_t line_no = 1;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != n + 2) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n + 2) + " fields, got " +
                        std::to_string(fields.size()));
    }
    Sample s;
    s.x.resize(n);
    const std::string& uid = fields[0];
    try {
      std::size_t used = 0;
      s.idx = std::stol(fields[1], &used);
      if (used != fields[1].size() || s.idx < 0) throw std::invalid_argument("idx");
      for (int i = 0; i < n; ++i) {
        s.x[i] = static_cast<double>(std::stof(fields[i + 2]));
      }
    } catch (const std::exception&) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": unparsable value");
    }
    if (!s.x.allFinite()) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": non-finite feature value");
    }
    if (!seen.insert({uid, s.idx}).second) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": duplicate (" +
                        uid + ", " + std::to_string(s.idx) + ")");
    }
    auto [it, inserted] = by_user.try_emplace(uid);
    if (inserted) user_order.push_back(uid);
    it->second.push_back(std::move(s));
  }

  BiometricDataset ds;
  ds.n = n;
  std::sort(user_order.begin(), user_order.end());
  for (const auto& uid : user_order) {
    auto& samples = by_user[uid];
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.idx < b.idx; });
    if (samples.front().idx != 0) {
      throw FormatError(path + ": user " + uid + " has no enrollment sample (idx 0)");
    }
    UserRecord rec;
    rec.user_id = uid;
    rec.enrollment = std::move(samples.front().x);
    for (std::size_t i = 1; i < samples.size(); ++i) {
      rec.probes.push_back(std::move(samples[i].x));
    }
    ds.users.push_back(std::move(rec));
  }
  return ds;
}

void write_dataset_csv(const BiometricDataset& ds, const std::string& path) {
  LineWriter writer(path);
  std::string header = "user_id,sample_idx";
  for (int i = 0; i < ds.n; ++i) header += ",f" + std::to_string(i);
  writer.write(header);

  std::string line;
  const auto emit = [&](const std::string& uid, int idx, const Eigen::VectorXd& x) {
    line = uid + "," + std::to_string(idx);
    for (int i = 0; i < ds.n; ++i) {
      line += ",";
      line += format_f32(static_cast<float>(x[i]));
    }
    writer.write(line);
  };
  for (const auto& u : ds.users) {
    emit(u.user_id, 0, u.enrollment);
    for (std::size_t k = 0; k < u.probes.size(); ++k) {
      emit(u.user_id, static_cast<int>(k) + 1, u.probes[k]);
    }
  }
}

}  // namespace fsig
