#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocs/feature_store.hpp"
#include "ocs/perturbation.hpp"
#include "ocs/subspace.hpp"

namespace ocs {

// All scorers follow one orientation: higher value => more OOD.

enum class Scorer { pocs, msp, energy, mahalanobis, react_msp, react_energy, react_mahalanobis, complement_norm };

std::string to_string(Scorer s);
Scorer scorer_from_string(const std::string& s);
const std::vector<Scorer>& all_scorers();

struct ScoreRecord {
  std::string sample_id;
  Scorer scorer = Scorer::pocs;
  double value = 0.0;
  std::string params_digest;
};

/// ||P_perp (z_raw - mu)||_2. Also the P-OCS value when T = 0.
double complement_norm_score(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z_raw);

/// Accumulated step length of the complement dynamics.
///
/// Under Sharing::shared_sequence the T operators are drawn once at
/// construction and reused for every sample; under per_sample each call
/// draws the operators of its own (sample_index, step) streams.
class PocsScorer {
public:
  PocsScorer(const SubspaceModel& model, const PerturbationConfig& cfg);

  double score(const Eigen::Ref<const Eigen::VectorXd>& z_raw, std::uint64_t sample_index = 0) const;

  /// Scores consecutive rows; row r uses sample index first_index + r. Shared
  /// operators are applied to the whole block with matrix-matrix products, so
  /// results agree with score() to rounding rather than bit for bit.
  Eigen::VectorXd score_rows(const RowMatrix& rows, std::uint64_t first_index = 0) const;

  const PerturbationConfig& config() const { return cfg_; }

private:
  const SubspaceModel* model_;
  PerturbationConfig cfg_;
  std::vector<OrthoPerturbation> shared_;
};

double pocs_score(const SubspaceModel& model, const PerturbationConfig& cfg,
                  const Eigen::Ref<const Eigen::VectorXd>& z_raw, std::uint64_t sample_index = 0);

/// -max softmax(logits).
double msp_score(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// -T * logsumexp(logits / T).
double energy_score(const Eigen::Ref<const Eigen::VectorXd>& logits, double temperature = 1.0);

struct MahalanobisStats {
  std::vector<std::int64_t> classes;  // sorted label values, one per row of class_means
  RowMatrix class_means;              // C x d
  Eigen::MatrixXd covariance;         // pooled within-class covariance + lambda I
  Eigen::MatrixXd covariance_inverse;
  double lambda = 0.0;
};

/// Pooled within-class covariance uses the 1/N normalization. When `lambda`
/// is not given it defaults to 1e-6 * trace(Sigma) / d.
MahalanobisStats fit_mahalanobis(const RowMatrix& features, const std::vector<std::int64_t>& labels,
                                 std::optional<double> lambda = std::nullopt);
MahalanobisStats fit_mahalanobis(const FeatureMatrix& id_features, std::optional<double> lambda = std::nullopt);

/// min_c (z - mu_c)^T Sigma^-1 (z - mu_c).
double mahalanobis_score(const MahalanobisStats& stats, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Percentile with linear interpolation between order statistics (numpy's default rule).
double percentile(std::vector<double> values, double pct);

/// Clamp threshold: the given percentile of all ID activations pooled over samples and dimensions.
double react_threshold(const RowMatrix& id_features, double pct);

Eigen::VectorXd react_rectify(const Eigen::Ref<const Eigen::VectorXd>& z, double threshold);
Eigen::VectorXd react_rectify(const FeatureMatrix& id_features, double pct, const Eigen::Ref<const Eigen::VectorXd>& z);
RowMatrix react_rectify_rows(const RowMatrix& features, double threshold);

struct ScorerConfig {
  Scorer scorer = Scorer::pocs;
  PerturbationConfig perturbation;
  double temperature = 1.0;
  double percentile = 90.0;
};

/// Short hex digest of the parameters that influence the given scorer.
std::string params_digest(const ScorerConfig& cfg);

/// Fitted state a scorer may need. Pointers are borrowed; null means absent.
struct ScoringContext {
  const SubspaceModel* model = nullptr;
  const MahalanobisStats* mahalanobis = nullptr;        // fitted on raw ID features
  const MahalanobisStats* react_mahalanobis = nullptr;  // fitted on rectified ID features
  std::optional<double> react_threshold;
  const LinearHead* head = nullptr;
};

/// Scores every row of `dataset` (row i uses sample index i), preserving order.
/// P-OCS rows go through PocsScorer::score_rows in fixed blocks of
/// kScoreBlockRows, so output is independent of `threads`.
inline constexpr Eigen::Index kScoreBlockRows = 64;

std::vector<ScoreRecord> score_batch(const FeatureMatrix& dataset, const ScorerConfig& cfg, const ScoringContext& ctx,
                                     unsigned threads = 1);

}  // namespace ocs
