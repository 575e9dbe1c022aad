#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocs/npy.hpp"

namespace ocs {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x d feature block, one sample per row, with optional companions.
///
/// Values are held as doubles whatever the file dtype; `storage_dtype`
/// remembers the on-disk element type so an f32 file is written back with
/// an identical payload.
struct FeatureMatrix {
  RowMatrix data;
  std::vector<std::string> sample_ids;
  std::optional<std::vector<std::int64_t>> class_labels;
  std::optional<RowMatrix> logits;
  npy::DType storage_dtype = npy::DType::f64;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  /// Throws ocs::Error on any broken invariant.
  void validate() const;
};

/// Final linear classifier layer: logits = weights * z + bias.
struct LinearHead {
  RowMatrix weights;  // C x d
  Eigen::VectorXd bias;

  Eigen::Index classes() const { return weights.rows(); }
  void validate() const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

/// A dataset directory: features.npy plus optional labels.npy, logits.npy,
/// head_w.npy / head_b.npy and sample_ids.txt.
struct Dataset {
  FeatureMatrix features;
  std::optional<LinearHead> head;
};

enum class Format { npy, csv };

Format format_from_path(const std::filesystem::path& path);

FeatureMatrix load_features(const std::filesystem::path& path, Format format);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path, Format format);

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Parameters for the synthetic subspace-vs-isotropic benchmark.
struct SyntheticSpec {
  int d = 32;
  int k_true = 4;
  int n_id = 200;
  int n_ood = 200;
  double noise_sigma = 0.01;
  double ood_scale = 1.0;
  std::uint64_t seed = 0;
  // Classes are read off the leading latent coordinates; clamped to [2, k_true] (2 when k_true = 1).
  int n_classes = 4;

  void validate() const;
};

struct SyntheticData {
  Dataset id;
  Dataset ood;
};

/// ID rows: standard-normal latent coefficients mapped through a fixed random
/// orthonormal d x k_true frame, plus isotropic noise of scale noise_sigma.
/// OOD rows: isotropic Gaussian of scale ood_scale. Both sets share a linear
/// head whose logits are signed frame coordinates; ID labels are its argmax.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace ocs
