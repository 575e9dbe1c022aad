#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocs/feature_store.hpp"

namespace ocs {

/// How the principal dimension k is chosen from the ID spectrum.
struct RankPolicy {
  enum class Mode { fixed_k, variance_threshold };

  Mode mode = Mode::variance_threshold;
  int k = 0;
  double tau = 0.95;

  static RankPolicy fixed(int k) { return {Mode::fixed_k, k, 0.0}; }
  static RankPolicy variance(double tau) { return {Mode::variance_threshold, 0, tau}; }

  /// Checks the parameter ranges that do not depend on the data (d < 0 skips the k < d check).
  void validate(Eigen::Index d = -1) const;
  std::string describe() const;
};

/// Fitted ID geometry: mean, principal basis and its full orthonormal complement.
///
/// [basis_k | basis_perp] is a d x d orthogonal matrix, so the projectors
/// P = basis_k basis_k^T and P_perp = basis_perp basis_perp^T resolve the identity.
struct SubspaceModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd basis_k;     // d x k
  Eigen::MatrixXd basis_perp;  // d x (d - k)
  Eigen::VectorXd singular_values;  // min(N, d), descending
  int k = 0;

  Eigen::Index dim() const { return mu.size(); }
  Eigen::Index complement_dim() const { return basis_perp.cols(); }

  /// Fraction of ID variance captured by the first k components.
  double explained_variance(int components) const;
};

/// Seed for the Gaussian vectors that complete the basis when the thin SVD
/// does not span all of R^d.
inline constexpr std::uint64_t kDefaultCompletionSeed = 0;

SubspaceModel fit(const RowMatrix& id_features, const RankPolicy& policy,
                  std::uint64_t completion_seed = kDefaultCompletionSeed);
SubspaceModel fit(const FeatureMatrix& id_features, const RankPolicy& policy,
                  std::uint64_t completion_seed = kDefaultCompletionSeed);

Eigen::VectorXd project_principal(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd project_complement(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Largest entrywise deviations from the four basis invariants.
struct BasisErrors {
  double principal_orthonormality = 0;   // |U_k^T U_k - I|_max
  double complement_orthonormality = 0;  // |U_perp^T U_perp - I|_max
  double cross = 0;                      // |U_k^T U_perp|_max
  double completeness = 0;               // |U_k U_k^T + U_perp U_perp^T - I|_max
};
BasisErrors basis_errors(const SubspaceModel& model);

/// Explained-variance ratios of a feature set in two frames:
///  - id_basis: variance along each [basis_k | basis_perp] direction over total variance;
///  - complement: PCA ratios of the basis_perp coordinates.
/// A frame whose total variance is numerically zero reports zeros and sets its flag.
struct VarianceFrames {
  std::vector<double> id_basis;
  std::vector<double> complement;
  bool degenerate_total = false;
  bool degenerate_complement = false;
};
VarianceFrames variance_diagnostics(const SubspaceModel& model, const RowMatrix& features, int n_components);

/// Writes / reads mu.npy, basis_k.npy, basis_perp.npy and singular_values.npy.
void write_subspace_arrays(const SubspaceModel& model, const std::filesystem::path& dir);
SubspaceModel read_subspace_arrays(const std::filesystem::path& dir);

}  // namespace ocs
