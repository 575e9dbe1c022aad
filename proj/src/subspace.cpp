#include "ocs/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ocs/error.hpp"
#include "ocs/rng.hpp"

namespace ocs {
namespace fs = std::filesystem;

namespace {

// Flips each column so that its entry of largest magnitude is non-negative.
void canonicalize_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0) basis.col(j) *= -1.0;
  }
}

// Extends the orthonormal columns [0, filled) of `basis` to a full square
// orthonormal matrix using seeded Gaussian draws and two Gram-Schmidt passes.
void complete_basis(Eigen::MatrixXd& basis, Eigen::Index filled, std::uint64_t seed) {
  const Eigen::Index d = basis.rows();
  CounterRng rng(derive_stream(seed, 0xc0, 0));
  Eigen::VectorXd v(d);
  for (Eigen::Index j = filled; j < d;) {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    const double initial = v.norm();
    for (int pass = 0; pass < 2; ++pass) v -= basis.leftCols(j) * (basis.leftCols(j).transpose() * v);
    const double norm = v.norm();
    if (norm < 1e-6 * initial) continue;  // draw landed (numerically) inside the span
    basis.col(j) = v / norm;
    ++j;
  }
}

Eigen::MatrixXd to_matrix(const npy::Array& a) {
  const auto v = a.to_doubles();
  RowMatrix m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

npy::Array to_array(const Eigen::MatrixXd& m) {
  const RowMatrix r = m;
  return npy::from_doubles(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())),
                           {static_cast<std::size_t>(r.rows()), static_cast<std::size_t>(r.cols())});
}

npy::Array to_array(const Eigen::VectorXd& v) {
  return npy::from_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                           {static_cast<std::size_t>(v.size())});
}

}  // namespace

void RankPolicy::validate(Eigen::Index d) const {
  if (mode == Mode::fixed_k) {
    if (k < 1) throw Error("rank policy: k must be >= 1");
    if (d >= 0 && k >= d) throw Error("rank policy: k = " + std::to_string(k) + " must be < d = " + std::to_string(d));
  } else if (!(tau > 0.0 && tau < 1.0)) {
    throw Error("rank policy: variance threshold must lie in (0, 1)");
  }
}

std::string RankPolicy::describe() const {
  return mode == Mode::fixed_k ? "fixed_k" : "variance_threshold";
}

double SubspaceModel::explained_variance(int components) const {
  const double total = singular_values.squaredNorm();
  if (total <= 0) return 0.0;
  const auto n = std::min<Eigen::Index>(components, singular_values.size());
  return singular_values.head(n).squaredNorm() / total;
}

SubspaceModel fit(const RowMatrix& x, const RankPolicy& policy, std::uint64_t completion_seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error("subspace fit needs at least two samples");
  if (d < 2) throw Error("subspace fit needs d >= 2");
  if (!x.allFinite()) throw Error("subspace fit: features contain NaN or Inf");
  policy.validate(d);

  SubspaceModel model;
  model.mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mu.transpose();

  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if (centered.cwiseAbs().maxCoeff() <= 1e-12 * scale)
    throw Error("subspace fit: ID features have zero variance (all rows identical)");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  model.singular_values = svd.singularValues();
  const Eigen::VectorXd& s = model.singular_values;
  const double total = s.squaredNorm();

  int k = policy.k;
  if (policy.mode == RankPolicy::Mode::variance_threshold) {
    double cumulative = 0.0;
    k = 0;
    while (k < s.size()) {
      cumulative += s(k) * s(k);
      ++k;
      if (cumulative >= policy.tau * total) break;
    }
  }
  if (k < 1 || k >= d)
    throw Error("subspace fit: rank policy selected k = " + std::to_string(k) + ", need 1 <= k < d = " +
                std::to_string(d));
  model.k = k;

  const double tol = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;

  Eigen::MatrixXd basis(d, d);
  basis.leftCols(rank) = svd.matrixV().leftCols(rank);
  complete_basis(basis, rank, completion_seed);
  canonicalize_signs(basis);

  model.basis_k = basis.leftCols(k);
  model.basis_perp = basis.rightCols(d - k);
  return model;
}

SubspaceModel fit(const FeatureMatrix& id_features, const RankPolicy& policy, std::uint64_t completion_seed) {
  id_features.validate();
  return fit(id_features.data, policy, completion_seed);
}

Eigen::VectorXd project_principal(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != model.dim())
    throw Error("project_principal: expected length " + std::to_string(model.dim()) + ", got " + std::to_string(z.size()));
  return model.basis_k * (model.basis_k.transpose() * z);
}

Eigen::VectorXd project_complement(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != model.dim())
    throw Error("project_complement: expected length " + std::to_string(model.dim()) + ", got " + std::to_string(z.size()));
  return model.basis_perp * (model.basis_perp.transpose() * z);
}

BasisErrors basis_errors(const SubspaceModel& model) {
  const auto d = model.dim();
  const auto k = model.basis_k.cols();
  const auto m = model.basis_perp.cols();
  BasisErrors e;
  e.principal_orthonormality = (model.basis_k.transpose() * model.basis_k - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  e.complement_orthonormality =
      m == 0 ? 0.0 : (model.basis_perp.transpose() * model.basis_perp - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  e.cross = m == 0 ? 0.0 : (model.basis_k.transpose() * model.basis_perp).cwiseAbs().maxCoeff();
  e.completeness = (model.basis_k * model.basis_k.transpose() + model.basis_perp * model.basis_perp.transpose() -
                    Eigen::MatrixXd::Identity(d, d))
                       .cwiseAbs()
                       .maxCoeff();
  return e;
}

VarianceFrames variance_diagnostics(const SubspaceModel& model, const RowMatrix& features, int n_components) {
  const auto d = model.dim();
  const auto m = model.complement_dim();
  if (features.cols() != d)
    throw Error("variance diagnostics: features have d = " + std::to_string(features.cols()) + ", model has d = " +
                std::to_string(d));
  if (features.rows() < 1) throw Error("variance diagnostics: no samples");
  if (n_components < 1 || n_components > d || n_components > m)
    throw Error("variance diagnostics: n_components = " + std::to_string(n_components) + " out of range [1, " +
                std::to_string(std::min(d, m)) + "]");

  const Eigen::MatrixXd centered = features.rowwise() - model.mu.transpose();
  Eigen::MatrixXd basis(d, d);
  basis << model.basis_k, model.basis_perp;

  VarianceFrames out;
  out.id_basis.assign(static_cast<std::size_t>(n_components), 0.0);
  out.complement.assign(static_cast<std::size_t>(n_components), 0.0);

  Eigen::MatrixXd coords = centered * basis;
  coords.rowwise() -= coords.colwise().mean();
  const Eigen::VectorXd variances = coords.colwise().squaredNorm().transpose() / static_cast<double>(coords.rows());
  const double total = variances.sum();
  const double reference = std::max(total, centered.cwiseAbs2().sum() / static_cast<double>(centered.rows()));
  out.degenerate_total = !(total > 1e-300);
  if (!out.degenerate_total)
    for (int i = 0; i < n_components; ++i) out.id_basis[static_cast<std::size_t>(i)] = variances(i) / total;

  Eigen::MatrixXd comp = coords.rightCols(m);
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(comp).singularValues();
  const double comp_total = s.squaredNorm() / static_cast<double>(coords.rows());
  out.degenerate_complement = !(comp_total > 1e-20 * reference) || out.degenerate_total;
  if (!out.degenerate_complement) {
    for (int i = 0; i < n_components && i < s.size(); ++i)
      out.complement[static_cast<std::size_t>(i)] = s(i) * s(i) / s.squaredNorm();
  }
  return out;
}

void write_subspace_arrays(const SubspaceModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  npy::write(dir / "mu.npy", to_array(model.mu));
  npy::write(dir / "basis_k.npy", to_array(model.basis_k));
  npy::write(dir / "basis_perp.npy", to_array(model.basis_perp));
  npy::write(dir / "singular_values.npy", to_array(model.singular_values));
}

SubspaceModel read_subspace_arrays(const fs::path& dir) {
  SubspaceModel model;
  const auto mu = npy::read(dir / "mu.npy").to_doubles();
  model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  model.basis_k = to_matrix(npy::read(dir / "basis_k.npy"));
  model.basis_perp = to_matrix(npy::read(dir / "basis_perp.npy"));
  const auto s = npy::read(dir / "singular_values.npy").to_doubles();
  model.singular_values = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  model.k = static_cast<int>(model.basis_k.cols());
  const auto d = model.mu.size();
  if (model.basis_k.rows() != d || model.basis_perp.rows() != d || model.basis_k.cols() + model.basis_perp.cols() != d)
    throw Error("model bundle " + dir.string() + ": basis shapes are inconsistent with mu");
  if (model.k < 1 || model.k >= d) throw Error("model bundle " + dir.string() + ": invalid k");
  return model;
}

}  // namespace ocs
