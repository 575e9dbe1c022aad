#include "ocs/perturbation.hpp"

#include "ocs/error.hpp"

namespace ocs {

std::string to_string(Sharing s) { return s == Sharing::shared_sequence ? "shared" : "per-sample"; }

Sharing sharing_from_string(const std::string& s) {
  if (s == "shared" || s == "shared_sequence") return Sharing::shared_sequence;
  if (s == "per-sample" || s == "per_sample") return Sharing::per_sample;
  throw Error("unknown sharing policy '" + s + "' (expected shared or per-sample)");
}

void PerturbationConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("epsilon must lie in [0, 1]");
  if (!(delta >= 0.0)) throw Error("delta must be >= 0");
  if (t_steps < 0) throw Error("number of steps T must be >= 0");
}

Eigen::MatrixXd sample_haar_orthogonal(Eigen::Index m, CounterRng& rng) {
  if (m < 1) throw Error("orthogonal matrix dimension must be >= 1");
  Eigen::MatrixXd gauss(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

OrthoPerturbation sample_perturbation(Eigen::Index m, const PerturbationConfig& cfg, CounterRng& rng) {
  cfg.validate();
  OrthoPerturbation p;
  p.q_matrix = sample_haar_orthogonal(m, rng);
  p.d_diag.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) p.d_diag(i) = rng.uniform(1.0 - cfg.delta, 1.0 + cfg.delta);
  Eigen::MatrixXd mix = cfg.epsilon * p.q_matrix;
  mix.diagonal().array() += 1.0 - cfg.epsilon;
  p.a_matrix = mix * p.d_diag.asDiagonal();
  return p;
}

std::uint64_t perturbation_stream(const PerturbationConfig& cfg, std::uint64_t sample_index, int step) {
  const std::uint64_t index = cfg.sharing == Sharing::shared_sequence ? 0 : sample_index;
  return derive_stream(cfg.seed, index, static_cast<std::uint64_t>(step));
}

OrthoPerturbation perturbation_for(Eigen::Index m, const PerturbationConfig& cfg, std::uint64_t sample_index, int step) {
  CounterRng rng(perturbation_stream(cfg, sample_index, step));
  return sample_perturbation(m, cfg, rng);
}

Eigen::VectorXd ocd_step(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z,
                         const OrthoPerturbation& pert) {
  if (z.size() != model.dim())
    throw Error("ocd_step: feature has length " + std::to_string(z.size()) + ", model has d = " +
                std::to_string(model.dim()));
  if (pert.dim() != model.complement_dim())
    throw Error("ocd_step: perturbation acts on " + std::to_string(pert.dim()) + " dimensions, complement has " +
                std::to_string(model.complement_dim()));
  const Eigen::VectorXd principal = model.basis_k.transpose() * z;
  const Eigen::VectorXd complement = model.basis_perp.transpose() * z;
  return model.basis_k * principal + model.basis_perp * (pert.a_matrix * complement);
}

std::vector<Eigen::VectorXd> ocd_trajectory(const SubspaceModel& model, const PerturbationConfig& cfg,
                                            const Eigen::Ref<const Eigen::VectorXd>& z0, std::uint64_t sample_index) {
  cfg.validate();
  std::vector<Eigen::VectorXd> states;
  states.reserve(static_cast<std::size_t>(cfg.t_steps) + 1);
  states.emplace_back(z0);
  for (int t = 0; t < cfg.t_steps; ++t) {
    const auto pert = perturbation_for(model.complement_dim(), cfg, sample_index, t);
    states.push_back(ocd_step(model, states.back(), pert));
  }
  return states;
}

}  // namespace ocs
