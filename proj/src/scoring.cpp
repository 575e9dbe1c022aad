#include "ocs/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ocs/error.hpp"

namespace ocs {

namespace {

const std::vector<std::pair<Scorer, const char*>>& scorer_names() {
  static const std::vector<std::pair<Scorer, const char*>> names = {
      {Scorer::pocs, "pocs"},
      {Scorer::msp, "msp"},
      {Scorer::energy, "energy"},
      {Scorer::mahalanobis, "mahalanobis"},
      {Scorer::react_msp, "react_msp"},
      {Scorer::react_energy, "react_energy"},
      {Scorer::react_mahalanobis, "react_mahalanobis"},
      {Scorer::complement_norm, "complement_norm"},
  };
  return names;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

std::string hexify(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Scorer s) {
  for (const auto& [id, name] : scorer_names())
    if (id == s) return name;
  return "unknown";
}

Scorer scorer_from_string(const std::string& s) {
  for (const auto& [id, name] : scorer_names())
    if (s == name) return id;
  throw Error("unknown scorer '" + s + "'");
}

const std::vector<Scorer>& all_scorers() {
  static const std::vector<Scorer> all = [] {
    std::vector<Scorer> v;
    for (const auto& entry : scorer_names()) v.push_back(entry.first);
    return v;
  }();
  return all;
}

double complement_norm_score(const SubspaceModel& model, const Eigen::Ref<const Eigen::VectorXd>& z_raw) {
  if (z_raw.size() != model.dim())
    throw Error("complement_norm: feature has length " + std::to_string(z_raw.size()) + ", model has d = " +
                std::to_string(model.dim()));
  return (model.basis_perp.transpose() * (z_raw - model.mu)).norm();
}

PocsScorer::PocsScorer(const SubspaceModel& model, const PerturbationConfig& cfg) : model_(&model), cfg_(cfg) {
  cfg_.validate();
  if (cfg_.sharing == Sharing::shared_sequence) {
    shared_.reserve(static_cast<std::size_t>(cfg_.t_steps));
    for (int t = 0; t < cfg_.t_steps; ++t) shared_.push_back(perturbation_for(model.complement_dim(), cfg_, 0, t));
  }
}

double PocsScorer::score(const Eigen::Ref<const Eigen::VectorXd>& z_raw, std::uint64_t sample_index) const {
  const SubspaceModel& model = *model_;
  if (z_raw.size() != model.dim())
    throw Error("pocs: feature has length " + std::to_string(z_raw.size()) + ", model has d = " +
                std::to_string(model.dim()));
  if (cfg_.t_steps == 0) return complement_norm_score(model, z_raw);

  // basis_perp has orthonormal columns and the principal part never moves, so
  // ||z_{t+1} - z_t|| = ||(A_t - I) c_t|| with c_t the complement coordinates.
  Eigen::VectorXd c = model.basis_perp.transpose() * (z_raw - model.mu);
  Eigen::VectorXd next(c.size());
  double total = 0.0;
  for (int t = 0; t < cfg_.t_steps; ++t) {
    if (cfg_.sharing == Sharing::shared_sequence) {
      next.noalias() = shared_[static_cast<std::size_t>(t)].a_matrix * c;
    } else {
      next.noalias() = perturbation_for(model.complement_dim(), cfg_, sample_index, t).a_matrix * c;
    }
    total += (next - c).norm();
    c.swap(next);
  }
  return total;
}

Eigen::VectorXd PocsScorer::score_rows(const RowMatrix& rows, std::uint64_t first_index) const {
  const SubspaceModel& model = *model_;
  if (rows.cols() != model.dim())
    throw Error("pocs: features have d = " + std::to_string(rows.cols()) + ", model has d = " +
                std::to_string(model.dim()));
  Eigen::VectorXd out(rows.rows());
  if (cfg_.t_steps == 0 || cfg_.sharing == Sharing::per_sample) {
    for (Eigen::Index r = 0; r < rows.rows(); ++r)
      out(r) = score(rows.row(r).transpose(), first_index + static_cast<std::uint64_t>(r));
    return out;
  }
  RowMatrix c = (rows.rowwise() - model.mu.transpose()) * model.basis_perp;
  RowMatrix next(c.rows(), c.cols());
  out.setZero();
  for (const auto& pert : shared_) {
    next.noalias() = c * pert.a_matrix.transpose();
    out += (next - c).rowwise().norm();
    c.swap(next);
  }
  return out;
}

double pocs_score(const SubspaceModel& model, const PerturbationConfig& cfg,
                  const Eigen::Ref<const Eigen::VectorXd>& z_raw, std::uint64_t sample_index) {
  return PocsScorer(model, cfg).score(z_raw, sample_index);
}

double msp_score(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  if (logits.size() < 1) throw Error("msp: empty logits");
  if (!logits.allFinite()) throw Error("msp: logits contain NaN or Inf");
  // max softmax = exp(max - lse)
  return -std::exp(logits.maxCoeff() - log_sum_exp(logits));
}

double energy_score(const Eigen::Ref<const Eigen::VectorXd>& logits, double temperature) {
  if (!(temperature > 0.0)) throw Error("energy: temperature must be > 0");
  if (logits.size() < 1) throw Error("energy: empty logits");
  if (!logits.allFinite()) throw Error("energy: logits contain NaN or Inf");
  return -temperature * log_sum_exp(logits / temperature);
}

MahalanobisStats fit_mahalanobis(const RowMatrix& features, const std::vector<std::int64_t>& labels,
                                 std::optional<double> lambda) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error("mahalanobis: labels length does not match the number of samples");

  std::map<std::int64_t, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < n; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [label, rows] : members)
    if (rows.size() < 2)
      throw Error("mahalanobis: class " + std::to_string(label) + " has fewer than two samples");

  MahalanobisStats stats;
  stats.class_means.resize(static_cast<Eigen::Index>(members.size()), d);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  Eigen::Index c = 0;
  for (const auto& [label, rows] : members) {
    stats.classes.push_back(label);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (auto i : rows) mean += features.row(i).transpose();
    mean /= static_cast<double>(rows.size());
    stats.class_means.row(c++) = mean.transpose();
    for (auto i : rows) {
      const Eigen::VectorXd diff = features.row(i).transpose() - mean;
      scatter.selfadjointView<Eigen::Lower>().rankUpdate(diff);
    }
  }
  Eigen::MatrixXd cov = scatter.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  stats.lambda = lambda ? *lambda : 1e-6 * cov.trace() / static_cast<double>(d);
  if (!(stats.lambda >= 0.0)) throw Error("mahalanobis: regularization must be >= 0");
  cov.diagonal().array() += stats.lambda;
  stats.covariance = cov;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || cov.diagonal().minCoeff() <= 0.0)
    throw Error("mahalanobis: pooled covariance is singular after regularization");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  stats.covariance_inverse = 0.5 * (inv + inv.transpose());
  return stats;
}

MahalanobisStats fit_mahalanobis(const FeatureMatrix& id_features, std::optional<double> lambda) {
  if (!id_features.class_labels) throw Error("mahalanobis: ID features have no class labels (labels.npy)");
  return fit_mahalanobis(id_features.data, *id_features.class_labels, lambda);
}

double mahalanobis_score(const MahalanobisStats& stats, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != stats.class_means.cols())
    throw Error("mahalanobis: feature has length " + std::to_string(z.size()) + ", stats have d = " +
                std::to_string(stats.class_means.cols()));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < stats.class_means.rows(); ++c) {
    const Eigen::VectorXd diff = z - stats.class_means.row(c).transpose();
    best = std::min(best, diff.dot(stats.covariance_inverse * diff));
  }
  return best;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw Error("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw Error("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double react_threshold(const RowMatrix& id_features, double pct) {
  if (!(pct > 0.0 && pct <= 100.0)) throw Error("react: percentile must lie in (0, 100]");
  return percentile(std::vector<double>(id_features.data(), id_features.data() + id_features.size()), pct);
}

Eigen::VectorXd react_rectify(const Eigen::Ref<const Eigen::VectorXd>& z, double threshold) {
  return z.cwiseMin(threshold);
}

Eigen::VectorXd react_rectify(const FeatureMatrix& id_features, double pct, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return react_rectify(z, react_threshold(id_features.data, pct));
}

RowMatrix react_rectify_rows(const RowMatrix& features, double threshold) { return features.cwiseMin(threshold); }

std::string params_digest(const ScorerConfig& cfg) {
  std::ostringstream s;
  s << "scorer=" << to_string(cfg.scorer);
  switch (cfg.scorer) {
    case Scorer::pocs: {
      const auto& p = cfg.perturbation;
      s << ";epsilon=" << exact(p.epsilon) << ";delta=" << exact(p.delta) << ";t=" << p.t_steps << ";seed=" << p.seed
        << ";sharing=" << to_string(p.sharing);
      break;
    }
    case Scorer::energy: s << ";temperature=" << exact(cfg.temperature); break;
    case Scorer::react_energy:
      s << ";temperature=" << exact(cfg.temperature) << ";percentile=" << exact(cfg.percentile);
      break;
    case Scorer::react_msp:
    case Scorer::react_mahalanobis: s << ";percentile=" << exact(cfg.percentile); break;
    default: break;
  }
  return hexify(fnv1a(s.str()));
}

namespace {

// Resolves everything a scorer needs up front so that per-row work can't fail on missing inputs.
class RowScorer {
public:
  RowScorer(const FeatureMatrix& ds, const ScorerConfig& cfg, const ScoringContext& ctx) : ds_(ds), cfg_(cfg), ctx_(ctx) {
    const Scorer s = cfg.scorer;
    const bool needs_model = s == Scorer::pocs || s == Scorer::complement_norm;
    if (needs_model) {
      if (!ctx.model) throw Error(to_string(s) + " requires a fitted subspace model");
      if (ctx.model->dim() != ds.dim())
        throw Error("dataset has d = " + std::to_string(ds.dim()) + " but the model has d = " +
                    std::to_string(ctx.model->dim()));
    }
    if (s == Scorer::pocs) pocs_.emplace(*ctx.model, cfg.perturbation);
    if ((s == Scorer::msp || s == Scorer::energy) && !ds.logits && !ctx.head)
      throw Error(to_string(s) + " requires logits (logits.npy) or a linear head (head_w.npy/head_b.npy)");
    if (s == Scorer::react_msp || s == Scorer::react_energy) {
      if (!ctx.head) throw Error(to_string(s) + " requires a linear head (head_w.npy/head_b.npy)");
      if (!ctx.react_threshold) throw Error(to_string(s) + " requires a fitted ReAct threshold");
    }
    if (ctx.head && ctx.head->weights.cols() != ds.dim() &&
        (s == Scorer::msp || s == Scorer::energy || s == Scorer::react_msp || s == Scorer::react_energy))
      throw Error("linear head expects d = " + std::to_string(ctx.head->weights.cols()) + ", dataset has d = " +
                  std::to_string(ds.dim()));
    if (s == Scorer::mahalanobis && !ctx.mahalanobis)
      throw Error("mahalanobis requires class statistics fitted on labelled ID features (labels.npy)");
    if (s == Scorer::react_mahalanobis && (!ctx.react_mahalanobis || !ctx.react_threshold))
      throw Error("react_mahalanobis requires a ReAct threshold and class statistics fitted on labelled ID features");
    digest_ = params_digest(cfg);
  }

  ScoreRecord operator()(Eigen::Index i) const {
    const Eigen::VectorXd z = ds_.data.row(i).transpose();
    ScoreRecord r{ds_.sample_ids[static_cast<std::size_t>(i)], cfg_.scorer, 0.0, digest_};
    switch (cfg_.scorer) {
      case Scorer::pocs: r.value = pocs_->score(z, static_cast<std::uint64_t>(i)); break;
      case Scorer::complement_norm: r.value = complement_norm_score(*ctx_.model, z); break;
      case Scorer::msp: r.value = msp_score(logits(i, z)); break;
      case Scorer::energy: r.value = energy_score(logits(i, z), cfg_.temperature); break;
      case Scorer::mahalanobis: r.value = mahalanobis_score(*ctx_.mahalanobis, z); break;
      case Scorer::react_msp: r.value = msp_score(ctx_.head->apply(react_rectify(z, *ctx_.react_threshold))); break;
      case Scorer::react_energy:
        r.value = energy_score(ctx_.head->apply(react_rectify(z, *ctx_.react_threshold)), cfg_.temperature);
        break;
      case Scorer::react_mahalanobis:
        r.value = mahalanobis_score(*ctx_.react_mahalanobis, react_rectify(z, *ctx_.react_threshold));
        break;
    }
    if (!std::isfinite(r.value)) throw Error("non-finite score for sample '" + r.sample_id + "'");
    return r;
  }

  void block(Eigen::Index begin, Eigen::Index end, std::vector<ScoreRecord>& out) const {
    if (!pocs_) {
      for (Eigen::Index i = begin; i < end; ++i) out[static_cast<std::size_t>(i)] = (*this)(i);
      return;
    }
    const Eigen::VectorXd v = pocs_->score_rows(ds_.data.middleRows(begin, end - begin), static_cast<std::uint64_t>(begin));
    for (Eigen::Index i = begin; i < end; ++i) {
      ScoreRecord r{ds_.sample_ids[static_cast<std::size_t>(i)], cfg_.scorer, v(i - begin), digest_};
      if (!std::isfinite(r.value)) throw Error("non-finite score for sample '" + r.sample_id + "'");
      out[static_cast<std::size_t>(i)] = std::move(r);
    }
  }

private:
  Eigen::VectorXd logits(Eigen::Index i, const Eigen::VectorXd& z) const {
    if (ds_.logits) return ds_.logits->row(i).transpose();
    return ctx_.head->apply(z);
  }

  const FeatureMatrix& ds_;
  const ScorerConfig& cfg_;
  const ScoringContext& ctx_;
  std::optional<PocsScorer> pocs_;
  std::string digest_;
};

}  // namespace

std::vector<ScoreRecord> score_batch(const FeatureMatrix& dataset, const ScorerConfig& cfg, const ScoringContext& ctx,
                                     unsigned threads) {
  dataset.validate();
  const RowScorer scorer(dataset, cfg, ctx);
  const Eigen::Index n = dataset.rows();
  std::vector<ScoreRecord> out(static_cast<std::size_t>(n));
  const Eigen::Index blocks = (n + kScoreBlockRows - 1) / kScoreBlockRows;
  auto run_block = [&](Eigen::Index b) {
    const Eigen::Index begin = b * kScoreBlockRows;
    const Eigen::Index end = std::min(n, begin + kScoreBlockRows);
    scorer.block(begin, end, out);
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (threads == 1) {
    for (Eigen::Index b = 0; b < blocks; ++b) run_block(b);
    return out;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (Eigen::Index b = w; b < blocks; b += threads) run_block(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace ocs
