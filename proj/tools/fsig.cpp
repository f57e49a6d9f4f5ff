// fsig: fuzzy signatures over a triangular-lattice linear sketch, plus the
// estimation pipeline for deciding whether a data source clears the
// FNMR / ConFMR thresholds the scheme needs.
//
// Exit codes: 0 success (verify: accept), 1 verify reject, 2 input error,
// 3 degenerate statistics.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "fsig/dataset.hpp"
#include "fsig/entropy.hpp"
#include "fsig/errors.hpp"
#include "fsig/fuzzy_signature.hpp"
#include "fsig/io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

std::string require_seed(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("FSIG_SEED"); env && *env) return env;
  throw fsig::FormatError("a seed is required: pass --seed or set FSIG_SEED");
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fsig::FormatError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw fsig::FormatError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw fsig::FormatError("cannot write file: " + path);
  out << text;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
  } else {
    write_text(out_path, text);
  }
}

// One comma-separated row of n feature values.
Eigen::VectorXd read_vector_csv(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw fsig::FormatError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw fsig::FormatError(path + ": empty file");
  const auto fields = fsig::split_csv_line(line);
  if (static_cast<int>(fields.size()) != n) {
    throw fsig::FormatError(path + ": expected " + std::to_string(n) +
                            " feature values, got " + std::to_string(fields.size()));
  }
  Eigen::VectorXd x(n);
  try {
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(std::stof(fields[i]));
  } catch (const std::exception&) {
    throw fsig::FormatError(path + ": unparsable feature value");
  }
  if (!x.allFinite()) throw fsig::FormatError(path + ": non-finite feature value");
  return x;
}

fsig::FSParams load_params(const std::string& path) {
  return fsig::FSParams::from_json(load_json(path));
}

json fit_to_json(const fsig::EvaFit& fit) {
  return json{{"k_star", fit.k_star},
              {"w_star", fit.w_star},
              {"k_max", fit.k_max},
              {"b", fit.b},
              {"r_exponent", fit.r_exponent},
              {"estimate_at_1", fit.estimate_at_1}};
}

struct CommonArgs {
  std::string params_path;
  std::string data_path;
  std::string out_path;
  std::string seed;
};

int run(int argc, char** argv) {
  CLI::App app{"fuzzy signatures over lattice linear sketches"};
  app.require_subcommand(1);

  // ---- setup ----------------------------------------------------------
  auto* setup_cmd = app.add_subcommand("setup", "generate scheme parameters");
  int setup_n = 8;
  double setup_d = 1.0;
  int setup_pbits = 224;
  int setup_m = 1;
  CommonArgs setup_args;
  setup_cmd->add_option("--n", setup_n, "feature dimension per source")->check(CLI::PositiveNumber);
  setup_cmd->add_option("--d", setup_d, "lattice basis length")->check(CLI::PositiveNumber);
  setup_cmd->add_option("--p-bits", setup_pbits, "bit length of the group order")
      ->check(CLI::Range(32, 512));
  setup_cmd->add_option("--m", setup_m, "number of composed sources")->check(CLI::PositiveNumber);
  setup_cmd->add_option("--seed", setup_args.seed, "deterministic seed");
  setup_cmd->add_option("--out", setup_args.out_path, "output params file (JSON)");

  // ---- keygen ---------------------------------------------------------
  auto* keygen_cmd = app.add_subcommand("keygen", "derive a verification key from a feature vector");
  CommonArgs keygen_args;
  std::string keygen_vec;
  keygen_cmd->add_option("--params", keygen_args.params_path, "params file")->required();
  keygen_cmd->add_option("--vector", keygen_vec, "feature vector CSV row")->required();
  keygen_cmd->add_option("--out", keygen_args.out_path, "output vk file (JSON)");

  // ---- sign -----------------------------------------------------------
  auto* sign_cmd = app.add_subcommand("sign", "sign a message with a fresh feature vector");
  CommonArgs sign_args;
  std::string sign_vec, sign_msg;
  sign_cmd->add_option("--params", sign_args.params_path, "params file")->required();
  sign_cmd->add_option("--vector", sign_vec, "feature vector CSV row")->required();
  sign_cmd->add_option("--message", sign_msg, "message file")->required();
  sign_cmd->add_option("--seed", sign_args.seed, "deterministic seed");
  sign_cmd->add_option("--out", sign_args.out_path, "output signature file (raw bytes)");

  // ---- verify ---------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "verify a signature");
  CommonArgs verify_args;
  std::string verify_vk, verify_msg, verify_sig;
  verify_cmd->add_option("--params", verify_args.params_path, "params file")->required();
  verify_cmd->add_option("--vk", verify_vk, "verification key file")->required();
  verify_cmd->add_option("--message", verify_msg, "message file")->required();
  verify_cmd->add_option("--sig", verify_sig, "signature file")->required();

  // ---- gen-data -------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic feature dataset");
  CommonArgs gen_args;
  int gen_users = 100, gen_probes = 2, gen_n = 8;
  double gen_d = 1.0, gen_user_spread = 1.0, gen_noise = 0.1;
  std::string gen_p;
  gen_cmd->add_option("--params", gen_args.params_path,
                      "params file (takes n, d, p from it)");
  gen_cmd->add_option("--n", gen_n, "feature dimension");
  gen_cmd->add_option("--d", gen_d, "lattice basis length");
  gen_cmd->add_option("--p", gen_p, "support modulus (decimal)");
  gen_cmd->add_option("--users", gen_users, "number of users")->check(CLI::Range(2, 1000000));
  gen_cmd->add_option("--probes", gen_probes, "probes per user")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--user-spread", gen_user_spread, "std of per-user centers")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise-spread", gen_noise, "std of measurement noise");
  gen_cmd->add_option("--seed", gen_args.seed, "deterministic seed");
  gen_cmd->add_option("--out", gen_args.out_path, "output CSV path (.gz supported)")->required();

  // ---- estimate-fnmr --------------------------------------------------
  auto* fnmr_cmd = app.add_subcommand("estimate-fnmr", "empirical false non-matching rate");
  CommonArgs fnmr_args;
  int fnmr_n = 0;
  double fnmr_d = 0.0;
  fnmr_cmd->add_option("--data", fnmr_args.data_path, "dataset CSV")->required();
  fnmr_cmd->add_option("--params", fnmr_args.params_path, "params file (for n, d)");
  fnmr_cmd->add_option("--n", fnmr_n, "feature dimension");
  fnmr_cmd->add_option("--d", fnmr_d, "lattice basis length");
  fnmr_cmd->add_option("--out", fnmr_args.out_path, "output JSON path");

  // ---- estimate-confmr ------------------------------------------------
  auto* confmr_cmd = app.add_subcommand(
      "estimate-confmr", "tail-fit FMR estimate with the sketch-distance correlation gate");
  CommonArgs confmr_args;
  int confmr_bins = 20;
  double confmr_frac = 0.005, confmr_global_frac = 0.001;
  std::string confmr_csv;
  confmr_cmd->add_option("--data", confmr_args.data_path, "dataset CSV")->required();
  confmr_cmd->add_option("--params", confmr_args.params_path, "params file")->required();
  confmr_cmd->add_option("--M,--bins", confmr_bins, "number of sketch-distance bins")
      ->check(CLI::Range(3, 100000));
  confmr_cmd->add_option("--kstar-fraction", confmr_frac, "per-bin tail fraction")
      ->check(CLI::Range(0.0, 1.0));
  confmr_cmd->add_option("--global-kstar-fraction", confmr_global_frac,
                         "tail fraction for the global estimate")
      ->check(CLI::Range(0.0, 1.0));
  confmr_cmd->add_option("--csv-out", confmr_csv, "also write per-bin rows as CSV");
  std::string confmr_curve;
  confmr_cmd->add_option("--fit-curve-out", confmr_curve,
                         "write the fitted tail curve and empirical k(w)/k_max as CSV");
  confmr_cmd->add_option("--out", confmr_args.out_path, "output JSON path");

  // ---- det-sweep ------------------------------------------------------
  auto* det_cmd = app.add_subcommand("det-sweep", "FNMR/ConFMR tradeoff across basis lengths");
  CommonArgs det_args;
  std::vector<double> det_ds;
  int det_n = 0, det_m = 1, det_bins = 20;
  double det_frac = 0.005, det_global_frac = 0.001;
  std::string det_p;
  det_cmd->add_option("--data", det_args.data_path, "dataset CSV")->required();
  det_cmd->add_option("--n", det_n, "feature dimension")->required();
  det_cmd->add_option("--d", det_ds, "basis length (repeatable)")->required();
  det_cmd->add_option("--m", det_m, "number of combined sources")->check(CLI::PositiveNumber);
  det_cmd->add_option("--p", det_p, "support modulus (decimal)")->required();
  det_cmd->add_option("--M,--bins", det_bins, "number of sketch-distance bins");
  det_cmd->add_option("--kstar-fraction", det_frac, "per-bin tail fraction");
  det_cmd->add_option("--global-kstar-fraction", det_global_frac,
                      "tail fraction for the global estimate");
  det_cmd->add_option("--seed", det_args.seed, "deterministic seed");
  det_cmd->add_option("--out", det_args.out_path, "output CSV path");

  // ---- t-test ---------------------------------------------------------
  auto* ttest_cmd = app.add_subcommand("t-test", "correlation gate on (x, estimate) rows");
  CommonArgs ttest_args;
  ttest_cmd->add_option("--input", ttest_args.data_path,
                        "CSV of x,estimate rows (no header)")->required();
  ttest_cmd->add_option("--out", ttest_args.out_path, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  if (setup_cmd->parsed()) {
    const std::string seed = require_seed(setup_args.seed);
    const fsig::GroupParams group = fsig::GroupParams::generate(setup_pbits, seed);
    std::vector<fsig::FuzzyKeySetting> sources;
    sources.reserve(setup_m);
    for (int i = 0; i < setup_m; ++i) {
      sources.emplace_back(fsig::TriangularLattice(setup_n, setup_d), group.p());
    }
    const fsig::SketchParams sketch_params =
        fsig::compose(sources, group.p(), seed);
    const fsig::FSParams params(group, sketch_params);
    emit(setup_args.out_path, params.to_json().dump(2));
    return kExitOk;
  }

  if (keygen_cmd->parsed()) {
    const fsig::FSParams params = load_params(keygen_args.params_path);
    const Eigen::VectorXd x = read_vector_csv(keygen_vec, params.sketch_params.dim());
    const fsig::VerificationKey vk = fsig::keygen(params, x);
    emit(keygen_args.out_path, fsig::vk_to_json(params, vk).dump(2));
    return kExitOk;
  }

  if (sign_cmd->parsed()) {
    const std::string seed = require_seed(sign_args.seed);
    const fsig::FSParams params = load_params(sign_args.params_path);
    const Eigen::VectorXd x = read_vector_csv(sign_vec, params.sketch_params.dim());
    const fsig::Bytes message = fsig::read_file_bytes(sign_msg);
    const fsig::FuzzySignature sig = fsig::sign(params, x, message, seed);
    const fsig::Bytes blob = fsig::serialize_signature(params, sig);
    if (sign_args.out_path.empty()) {
      throw fsig::FormatError("sign: --out is required (signature is a binary blob)");
    }
    fsig::write_file_bytes(sign_args.out_path, blob);
    return kExitOk;
  }

  if (verify_cmd->parsed()) {
    const fsig::FSParams params = load_params(verify_args.params_path);
    const fsig::VerificationKey vk = fsig::vk_from_json(params, load_json(verify_vk));
    const fsig::Bytes message = fsig::read_file_bytes(verify_msg);
    const fsig::FuzzySignature sig =
        fsig::deserialize_signature(params, fsig::read_file_bytes(verify_sig));
    if (fsig::verify(params, vk, message, sig)) {
      std::cout << "accept\n";
      return kExitOk;
    }
    std::cout << "reject\n";
    return kExitReject;
  }

  if (gen_cmd->parsed()) {
    const std::string seed = require_seed(gen_args.seed);
    std::vector<fsig::TriangularLattice> blocks;
    fsig::Bignum p;
    if (!gen_args.params_path.empty()) {
      const fsig::FSParams params = load_params(gen_args.params_path);
      blocks = params.sketch_params.blocks();
      p = params.sketch_params.p();
    } else {
      if (gen_p.empty()) {
        throw fsig::FormatError("gen-data: pass --params or all of --n/--d/--p");
      }
      blocks.emplace_back(gen_n, gen_d);
      try {
        p = fsig::Bignum(gen_p, 10);
      } catch (const std::invalid_argument&) {
        throw fsig::FormatError("gen-data: --p must be a decimal integer");
      }
    }
    fsig::SyntheticModel model{fsig::FuzzyKeySetting(std::move(blocks), p),
                               gen_user_spread, gen_noise, seed};
    const fsig::BiometricDataset ds =
        fsig::generate_synthetic(model, gen_users, gen_probes);
    fsig::write_dataset_csv(ds, gen_args.out_path);
    return kExitOk;
  }

  if (fnmr_cmd->parsed()) {
    int n = fnmr_n;
    double d = fnmr_d;
    if (!fnmr_args.params_path.empty()) {
      const fsig::FSParams params = load_params(fnmr_args.params_path);
      if (!params.sketch_params.single_block()) {
        throw fsig::FormatError(
            "estimate-fnmr: composed params; estimate each source separately");
      }
      n = params.sketch_params.blocks().front().dim();
      d = params.sketch_params.blocks().front().basis_length();
    }
    if (n <= 0 || !(d > 0.0)) {
      throw fsig::FormatError("estimate-fnmr: pass --params or both --n and --d");
    }
    const fsig::BiometricDataset ds = fsig::read_dataset_csv(fnmr_args.data_path);
    if (ds.n != n) throw fsig::FormatError("estimate-fnmr: dataset dimension mismatch");
    const double fnmr = fsig::estimate_fnmr(ds, fsig::TriangularLattice(n, d));
    emit(fnmr_args.out_path, json{{"fnmr", fnmr}}.dump(2));
    return kExitOk;
  }

  if (confmr_cmd->parsed()) {
    const fsig::FSParams params = load_params(confmr_args.params_path);
    if (!params.sketch_params.single_block()) {
      throw fsig::FormatError(
          "estimate-confmr: composed params; estimate each source separately");
    }
    const fsig::BiometricDataset ds = fsig::read_dataset_csv(confmr_args.data_path);
    const fsig::ConfmrAnalysis analysis = fsig::analyze_confmr(
        ds, params.sketch_params, confmr_bins, confmr_global_frac, confmr_frac);

    json summary{{"fmr_estimate", analysis.global_fit.estimate_at_1},
                 {"confmr_per_bin", analysis.bins.per_bin_estimates},
                 {"p_value", analysis.ttest.p_value},
                 {"r_corr", analysis.ttest.r_corr},
                 {"decision", analysis.ttest.uncorrelated_at_005 ? "FMR≈ConFMR"
                                                                 : "correlated"},
                 {"fit", fit_to_json(analysis.global_fit)}};
    if (!confmr_csv.empty()) {
      std::string rows = "bin_midpoint,confmr_estimate\n";
      const auto mids = analysis.bins.midpoints();
      char buf[64];
      for (std::size_t t = 0; t < mids.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mids[t],
                      analysis.bins.per_bin_estimates[t]);
        rows += buf;
      }
      write_text(confmr_csv, rows);
    }
    if (!confmr_curve.empty()) {
      // Fitted curve against the empirical step function for visual
      // validation of the tail fit.
      const auto& fit = analysis.global_fit;
      std::string rows = "w,fitted,empirical\n";
      char buf[96];
      const double w_hi = fit.entry_scales.back();
      const int steps = 400;
      for (int i = 0; i <= steps; ++i) {
        const double w = w_hi * (i + 1) / (steps + 1);
        const auto rank = std::upper_bound(fit.entry_scales.begin(),
                                           fit.entry_scales.end(), w) -
                          fit.entry_scales.begin();
        const double empirical =
            static_cast<double>(rank) / static_cast<double>(fit.k_max);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", w, fit.fitted_at(w),
                      empirical);
        rows += buf;
      }
      write_text(confmr_curve, rows);
    }
    emit(confmr_args.out_path, summary.dump(2));
    return kExitOk;
  }

  if (det_cmd->parsed()) {
    const std::string seed = require_seed(det_args.seed);
    fsig::Bignum p;
    try {
      p = fsig::Bignum(det_p, 10);
    } catch (const std::invalid_argument&) {
      throw fsig::FormatError("det-sweep: --p must be a decimal integer");
    }
    const fsig::BiometricDataset ds = fsig::read_dataset_csv(det_args.data_path);
    fsig::DetSweepOptions options;
    options.bins = det_bins;
    options.global_k_star_fraction = det_global_frac;
    options.bin_k_star_fraction = det_frac;
    options.seed = seed;
    const auto rows = fsig::det_sweep(ds, det_n, det_ds, det_m, p, options);
    std::string text = "d,fnmr_m,confmr_m,p_value,r_corr\n";
    char buf[160];
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.d,
                    row.fnmr_m, row.confmr_m, row.p_value, row.r_corr);
      text += buf;
    }
    emit(det_args.out_path, text);
    return kExitOk;
  }

  if (ttest_cmd->parsed()) {
    std::ifstream in(ttest_args.data_path);
    if (!in) throw fsig::FormatError("cannot open file: " + ttest_args.data_path);
    std::vector<double> xs, ys;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = fsig::split_csv_line(line);
      if (fields.size() != 2) {
        throw fsig::FormatError(ttest_args.data_path + ": line " +
                                std::to_string(line_no) + ": expected x,estimate");
      }
      try {
        xs.push_back(std::stod(fields[0]));
        ys.push_back(std::stod(fields[1]));
      } catch (const std::exception&) {
        if (line_no == 1) {  // tolerate a header row
          continue;
        }
        throw fsig::FormatError(ttest_args.data_path + ": line " +
                                std::to_string(line_no) + ": unparsable value");
      }
    }
    const fsig::TTestResult result = fsig::t_test(xs, ys);
    emit(ttest_args.out_path,
         json{{"r_corr", result.r_corr},
              {"t_stat", result.t_stat},
              {"p_value", result.p_value},
              {"dof", result.dof},
              {"decision", result.uncorrelated_at_005 ? "FMR≈ConFMR" : "correlated"}}
             .dump(2));
    return kExitOk;
  }

  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fsig::DegenerateStatistics& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const fsig::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fsig::SupportError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
