#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ocs/evaluation.hpp"
#include "ocs/feature_store.hpp"
#include "ocs/scoring.hpp"
#include "ocs/subspace.hpp"

// Command implementations behind the `ocs` tool. Every command writes a
// meta.json into its output directory recording the resolved parameters and
// input hashes; nothing time- or host-dependent is written.

namespace ocs::app {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64 over the bytes of a file, as 16 hex digits.
std::string hash_file(const fs::path& path);
/// Hash over (relative name, file hash) of every regular file in `dir`, sorted by name.
std::string hash_directory(const fs::path& dir);

/// Everything `fit` produces.
struct Bundle {
  SubspaceModel model;
  std::optional<MahalanobisStats> mahalanobis;
  std::optional<MahalanobisStats> react_mahalanobis;
  std::optional<LinearHead> head;
  double react_percentile = 90.0;
  double react_threshold = 0.0;
  nlohmann::json meta;
};

struct FitOptions {
  fs::path data_dir;
  fs::path out_dir;
  RankPolicy policy;
  std::uint64_t seed = 0;
  double percentile = 90.0;
};

Bundle run_fit(const FitOptions& opts);
void save_bundle(const Bundle& bundle, const fs::path& dir);
Bundle load_bundle(const fs::path& dir);

struct ScoreOptions {
  fs::path bundle_dir;
  fs::path data_dir;
  fs::path out_dir;
  ScorerConfig scorer;
  unsigned threads = 1;
};

/// Writes scores.csv, scores.jsonl and meta.json.
std::vector<ScoreRecord> run_score(const ScoreOptions& opts);

/// Scores a loaded dataset against a bundle (no I/O).
std::vector<ScoreRecord> score_dataset(const Bundle& bundle, const Dataset& data, const ScorerConfig& cfg,
                                       unsigned threads = 1);

void write_scores_csv(const std::vector<ScoreRecord>& records, const fs::path& path);
void write_scores_jsonl(const std::vector<ScoreRecord>& records, const fs::path& path);
std::vector<ScoreRecord> read_scores_csv(const fs::path& path);

struct EvalOptions {
  fs::path id_scores;
  fs::path ood_scores;
  fs::path out_dir;
  int bins = 50;
  double tpr_target = 0.95;
};

/// Writes report.json, roc.csv, pr.csv and histogram.csv.
EvalReport run_eval(const EvalOptions& opts);
nlohmann::json report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const fs::path& out_dir);

struct SynthOptions {
  SyntheticSpec spec;
  fs::path out_dir;
};

/// Writes out_dir/id and out_dir/ood dataset directories plus meta.json.
void run_synth(const SynthOptions& opts);

struct AblationRow {
  int t_steps = 0;
  double auroc = 0;
  double aupr = 0;
  double fpr_at_95 = 0;
};

struct AblateOptions {
  fs::path bundle_dir;
  fs::path id_dir;
  fs::path ood_dir;
  fs::path out_dir;
  std::vector<int> t_list{0, 1, 2, 3};
  PerturbationConfig perturbation;
  unsigned threads = 1;
};

/// Writes ablation.csv (T, AUROC, AUPR, FPR@95 as fractions) and meta.json.
std::vector<AblationRow> run_ablate_t(const AblateOptions& opts);
std::vector<AblationRow> ablate_t(const SubspaceModel& model, const RowMatrix& id, const RowMatrix& ood,
                                  const std::vector<int>& t_list, const PerturbationConfig& base, unsigned threads = 1);

struct DiagnoseOptions {
  fs::path bundle_dir;
  fs::path id_dir;
  fs::path ood_dir;
  fs::path out_dir;
  int n_components = 80;
};

/// Writes variance_id_basis.csv, variance_complement.csv (component_index, ratio_id,
/// ratio_ood), coordinates.csv (leading principal and complement coordinates) and meta.json.
void run_diagnose(const DiagnoseOptions& opts);

nlohmann::json perturbation_to_json(const PerturbationConfig& cfg);
nlohmann::json policy_to_json(const RankPolicy& policy);

}  // namespace ocs::app
