#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocs/rng.hpp"
#include "ocs/subspace.hpp"

namespace ocs {

/// Whether every sample sees the same operator A_t at step t or draws its own.
enum class Sharing { shared_sequence, per_sample };

std::string to_string(Sharing s);
Sharing sharing_from_string(const std::string& s);

struct PerturbationConfig {
  double epsilon = 0.1;  // weight of the random rotation in A
  double delta = 0.1;    // D entries ~ Uniform[1 - delta, 1 + delta]
  int t_steps = 1;
  std::uint64_t seed = 0;
  Sharing sharing = Sharing::shared_sequence;

  void validate() const;
};

/// One draw of A = ((1 - eps) I + eps Q) diag(D) acting on complement coordinates.
struct OrthoPerturbation {
  Eigen::MatrixXd a_matrix;
  Eigen::MatrixXd q_matrix;
  Eigen::VectorXd d_diag;

  Eigen::Index dim() const { return a_matrix.rows(); }
};

/// Haar-distributed m x m orthogonal matrix: Householder QR of an i.i.d.
/// standard Gaussian matrix (filled column by column), with the signs of
/// diag(R) folded into the columns of Q.
Eigen::MatrixXd sample_haar_orthogonal(Eigen::Index m, CounterRng& rng);

/// Draws Q, then the m diagonal scales, from `rng` and composes A.
OrthoPerturbation sample_perturbation(Eigen::Index m, const PerturbationConfig& cfg, CounterRng& rng);

/// Stream key for the operator of (sample_index, step). Under shared_sequence
/// the sample index is replaced by 0.
std::uint64_t perturbation_stream(const PerturbationConfig& cfg, std::uint64_t sample_index, int step);

/// The operator A_step for a given sample, drawn from its derived stream.
OrthoPerturbation perturbation_for(Eigen::Index m, const PerturbationConfig& cfg, std::uint64_t sample_index, int step);

/// z_{t+1} = P z_t + U_perp A U_perp^T z_t.
Eigen::VectorXd ocd_step(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z,
                         const OrthoPerturbation& pert);

/// States z_0 .. z_T of the dynamics started from the (already centered) z0.
std::vector<Eigen::VectorXd> ocd_trajectory(const SubspaceModel& model, const PerturbationConfig& cfg,
                                            const Eigen::Ref<const Eigen::VectorXd>& z0, std::uint64_t sample_index);

}  // namespace ocs
