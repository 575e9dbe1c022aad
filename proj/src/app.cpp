#include "ocs/app.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ocs/error.hpp"

namespace ocs::app {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

npy::Array array_of(const RowMatrix& m) {
  return npy::from_doubles(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
                           {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

npy::Array array_of(const Eigen::VectorXd& v) {
  return npy::from_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                           {static_cast<std::size_t>(v.size())});
}

RowMatrix matrix_of(const npy::Array& a) {
  const auto v = a.to_doubles();
  RowMatrix m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Eigen::VectorXd vector_of(const npy::Array& a) {
  const auto v = a.to_doubles();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void save_stats(const MahalanobisStats& s, const fs::path& dir, const std::string& prefix) {
  npy::write(dir / (prefix + "_classes.npy"), npy::from_ints(s.classes, {s.classes.size()}));
  npy::write(dir / (prefix + "_means.npy"), array_of(s.class_means));
  npy::write(dir / (prefix + "_cov.npy"), array_of(RowMatrix(s.covariance)));
  npy::write(dir / (prefix + "_cov_inv.npy"), array_of(RowMatrix(s.covariance_inverse)));
}

std::optional<MahalanobisStats> load_stats(const fs::path& dir, const std::string& prefix, double lambda) {
  if (!fs::exists(dir / (prefix + "_means.npy"))) return std::nullopt;
  MahalanobisStats s;
  s.classes = npy::read(dir / (prefix + "_classes.npy")).to_ints();
  s.class_means = matrix_of(npy::read(dir / (prefix + "_means.npy")));
  s.covariance = matrix_of(npy::read(dir / (prefix + "_cov.npy")));
  s.covariance_inverse = matrix_of(npy::read(dir / (prefix + "_cov_inv.npy")));
  s.lambda = lambda;
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<double> values_of(const std::vector<ScoreRecord>& records) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.value);
  return v;
}

}  // namespace

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return hex64(h);
}

std::string hash_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "meta.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    const std::string entry = f.filename().string() + ":" + hash_file(f) + ";";
    h = fnv1a(entry.data(), entry.size(), h);
  }
  return hex64(h);
}

json perturbation_to_json(const PerturbationConfig& cfg) {
  return {{"epsilon", cfg.epsilon},
          {"delta", cfg.delta},
          {"t", cfg.t_steps},
          {"seed", cfg.seed},
          {"sharing", to_string(cfg.sharing)},
          {"q_law", "haar: sign-corrected householder QR of iid N(0,1)"},
          {"d_law", "iid uniform[1-delta, 1+delta]"},
          {"stream", "derive_stream(seed, sharing == shared ? 0 : sample_index, step)"}};
}

json policy_to_json(const RankPolicy& policy) {
  json j{{"mode", policy.describe()}};
  if (policy.mode == RankPolicy::Mode::fixed_k)
    j["k"] = policy.k;
  else
    j["tau"] = policy.tau;
  return j;
}

// ---------------------------------------------------------------- fit

Bundle run_fit(const FitOptions& opts) {
  const Dataset data = load_dataset(opts.data_dir);
  if (!(opts.percentile > 0.0 && opts.percentile <= 100.0)) throw Error("percentile must lie in (0, 100]");

  Bundle b;
  b.model = fit(data.features, opts.policy, opts.seed);
  b.head = data.head;
  b.react_percentile = opts.percentile;
  b.react_threshold = react_threshold(data.features.data, opts.percentile);

  json baselines{{"react", {{"percentile", b.react_percentile}, {"threshold", b.react_threshold}}}};
  if (data.features.class_labels) {
    b.mahalanobis = fit_mahalanobis(data.features);
    b.react_mahalanobis = fit_mahalanobis(react_rectify_rows(data.features.data, b.react_threshold),
                                          *data.features.class_labels);
    baselines["mahalanobis"] = {{"lambda", b.mahalanobis->lambda},
                                {"react_lambda", b.react_mahalanobis->lambda},
                                {"classes", b.mahalanobis->classes.size()},
                                {"covariance", "pooled within-class, 1/N, + lambda I"},
                                {"lambda_rule", "1e-6 * trace(Sigma) / d"}};
  }

  const auto& m = b.model;
  b.meta = {{"tool", "ocs"},
            {"tool_version", kToolVersion},
            {"command", "fit"},
            {"inputs", {{"data_dir", opts.data_dir.string()}, {"data_hash", hash_directory(opts.data_dir)}}},
            {"n", data.features.rows()},
            {"d", m.dim()},
            {"k", m.k},
            {"policy", policy_to_json(opts.policy)},
            {"seed", opts.seed},
            {"explained_variance_at_k", m.explained_variance(m.k)},
            {"tolerances", {{"orthonormality", 1e-8}, {"completeness", 1e-7}}},
            {"sign_convention", "largest-magnitude entry of each basis column is non-negative"},
            {"baselines", baselines},
            {"has_head", b.head.has_value()}};
  save_bundle(b, opts.out_dir);
  return b;
}

void save_bundle(const Bundle& b, const fs::path& dir) {
  write_subspace_arrays(b.model, dir);
  if (b.mahalanobis) save_stats(*b.mahalanobis, dir, "maha");
  if (b.react_mahalanobis) save_stats(*b.react_mahalanobis, dir, "react_maha");
  if (b.head) {
    npy::write(dir / "head_w.npy", array_of(b.head->weights));
    npy::write(dir / "head_b.npy", array_of(b.head->bias));
  }
  write_json(dir / "meta.json", b.meta);
}

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("model bundle not found: " + dir.string());
  Bundle b;
  b.meta = read_json(dir / "meta.json");
  b.model = read_subspace_arrays(dir);
  if (b.meta.value("k", -1) != b.model.k) throw Error("model bundle " + dir.string() + ": meta.json k disagrees with basis_k.npy");
  const auto& base = b.meta.at("baselines");
  b.react_percentile = base.at("react").at("percentile").get<double>();
  b.react_threshold = base.at("react").at("threshold").get<double>();
  if (base.contains("mahalanobis")) {
    b.mahalanobis = load_stats(dir, "maha", base["mahalanobis"].at("lambda").get<double>());
    b.react_mahalanobis = load_stats(dir, "react_maha", base["mahalanobis"].at("react_lambda").get<double>());
  }
  if (fs::exists(dir / "head_w.npy")) {
    LinearHead h;
    h.weights = matrix_of(npy::read(dir / "head_w.npy"));
    h.bias = vector_of(npy::read(dir / "head_b.npy"));
    h.validate();
    b.head = std::move(h);
  }
  return b;
}

// ---------------------------------------------------------------- score

std::vector<ScoreRecord> score_dataset(const Bundle& bundle, const Dataset& data, const ScorerConfig& cfg,
                                       unsigned threads) {
  if (data.features.dim() != bundle.model.dim())
    throw Error("dataset has d = " + std::to_string(data.features.dim()) + " but the model has d = " +
                std::to_string(bundle.model.dim()));
  const bool react = cfg.scorer == Scorer::react_msp || cfg.scorer == Scorer::react_energy ||
                     cfg.scorer == Scorer::react_mahalanobis;
  if (react && cfg.percentile != bundle.react_percentile)
    throw Error("bundle was fitted with ReAct percentile " + shortest(bundle.react_percentile) +
                "; refit with --percentile " + shortest(cfg.percentile));

  ScoringContext ctx;
  ctx.model = &bundle.model;
  ctx.mahalanobis = bundle.mahalanobis ? &*bundle.mahalanobis : nullptr;
  ctx.react_mahalanobis = bundle.react_mahalanobis ? &*bundle.react_mahalanobis : nullptr;
  ctx.react_threshold = bundle.react_threshold;
  ctx.head = data.head ? &*data.head : (bundle.head ? &*bundle.head : nullptr);
  return score_batch(data.features, cfg, ctx, threads);
}

void write_scores_csv(const std::vector<ScoreRecord>& records, const fs::path& path) {
  std::string text = "sample_id,scorer,value\n";
  for (const auto& r : records) text += csv_field(r.sample_id) + "," + to_string(r.scorer) + "," + shortest(r.value) + "\n";
  write_text(path, text);
}

void write_scores_jsonl(const std::vector<ScoreRecord>& records, const fs::path& path) {
  std::string text;
  for (const auto& r : records) {
    const json j{{"sample_id", r.sample_id},
                 {"scorer", to_string(r.scorer)},
                 {"value", r.value},
                 {"params_digest", r.params_digest}};
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

std::vector<ScoreRecord> read_scores_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("score file " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_id,scorer,value") throw Error("score file " + path.string() + " has an unexpected header");
  std::vector<ScoreRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error("score file " + path.string() + ": line " + std::to_string(lineno) + " is malformed");
    ScoreRecord r;
    r.sample_id = f[0];
    r.scorer = scorer_from_string(f[1]);
    const auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.value);
    if (res.ec != std::errc{} || res.ptr != f[2].data() + f[2].size())
      throw Error("score file " + path.string() + ": bad value on line " + std::to_string(lineno));
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error("score file " + path.string() + " contains no scores");
  return out;
}

std::vector<ScoreRecord> run_score(const ScoreOptions& opts) {
  const Bundle bundle = load_bundle(opts.bundle_dir);
  const Dataset data = load_dataset(opts.data_dir);
  const auto records = score_dataset(bundle, data, opts.scorer, opts.threads);

  fs::create_directories(opts.out_dir);
  write_scores_csv(records, opts.out_dir / "scores.csv");
  write_scores_jsonl(records, opts.out_dir / "scores.jsonl");

  const json meta{{"tool", "ocs"},
                  {"tool_version", kToolVersion},
                  {"command", "score"},
                  {"inputs",
                   {{"bundle_dir", opts.bundle_dir.string()},
                    {"bundle_hash", hash_directory(opts.bundle_dir)},
                    {"data_dir", opts.data_dir.string()},
                    {"data_hash", hash_directory(opts.data_dir)}}},
                  {"scorer", to_string(opts.scorer.scorer)},
                  {"params_digest", params_digest(opts.scorer)},
                  {"perturbation", perturbation_to_json(opts.scorer.perturbation)},
                  {"t0_fallback", "complement_norm"},
                  {"temperature", opts.scorer.temperature},
                  {"percentile", opts.scorer.percentile},
                  {"orientation", "higher = more OOD"},
                  {"n", records.size()}};
  write_json(opts.out_dir / "meta.json", meta);
  return records;
}

// ---------------------------------------------------------------- eval

json report_to_json(const EvalReport& r) {
  json roc = json::array();
  json pr = json::array();
  for (const auto& p : r.curve) {
    roc.push_back({p.fpr, p.tpr, p.threshold});
    pr.push_back({p.tpr, p.precision, p.threshold});
  }
  return {{"schema_version", 1},
          {"scorer", r.scorer},
          {"auroc", r.auroc},
          {"aupr", r.aupr},
          {"fpr_at_95", r.fpr_at_95},
          {"tpr_target", r.tpr_target},
          {"n_id", r.n_id},
          {"n_ood", r.n_ood},
          {"conventions",
           {{"positive_class", "ood"},
            {"decision_rule", "score >= threshold flags OOD"},
            {"auroc_ties", "mid-rank"},
            {"aupr_variant", "average precision, OOD positive, step-wise"},
            {"fpr_threshold", "largest threshold with TPR >= target, no interpolation"}}},
          {"histogram",
           {{"edges", r.histogram.edges}, {"id_counts", r.histogram.id_counts}, {"ood_counts", r.histogram.ood_counts}}},
          {"roc_points", roc},
          {"pr_points", pr}};
}

void write_report(const EvalReport& r, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_json(out_dir / "report.json", report_to_json(r));
  std::string roc = "threshold,fpr,tpr\n";
  std::string pr = "threshold,recall,precision\n";
  for (const auto& p : r.curve) {
    roc += shortest(p.threshold) + "," + shortest(p.fpr) + "," + shortest(p.tpr) + "\n";
    pr += shortest(p.threshold) + "," + shortest(p.tpr) + "," + shortest(p.precision) + "\n";
  }
  write_text(out_dir / "roc.csv", roc);
  write_text(out_dir / "pr.csv", pr);
  std::string hist = "bin_lo,bin_hi,id_count,ood_count\n";
  for (std::size_t b = 0; b < r.histogram.id_counts.size(); ++b)
    hist += shortest(r.histogram.edges[b]) + "," + shortest(r.histogram.edges[b + 1]) + "," +
            std::to_string(r.histogram.id_counts[b]) + "," + std::to_string(r.histogram.ood_counts[b]) + "\n";
  write_text(out_dir / "histogram.csv", hist);
}

EvalReport run_eval(const EvalOptions& opts) {
  const auto id = read_scores_csv(opts.id_scores);
  const auto ood = read_scores_csv(opts.ood_scores);
  const auto report = make_report(id, ood, opts.bins, opts.tpr_target);
  write_report(report, opts.out_dir);
  const json meta{{"tool", "ocs"},
                  {"tool_version", kToolVersion},
                  {"command", "eval"},
                  {"inputs",
                   {{"id_scores", opts.id_scores.string()},
                    {"id_hash", hash_file(opts.id_scores)},
                    {"ood_scores", opts.ood_scores.string()},
                    {"ood_hash", hash_file(opts.ood_scores)}}},
                  {"bins", opts.bins},
                  {"tpr_target", opts.tpr_target}};
  write_json(opts.out_dir / "meta.json", meta);
  return report;
}

// ---------------------------------------------------------------- synth

void run_synth(const SynthOptions& opts) {
  const auto data = generate_synthetic(opts.spec);
  save_dataset(data.id, opts.out_dir / "id");
  save_dataset(data.ood, opts.out_dir / "ood");
  const auto& s = opts.spec;
  const json meta{{"tool", "ocs"},
                  {"tool_version", kToolVersion},
                  {"command", "synth"},
                  {"spec",
                   {{"d", s.d},
                    {"k_true", s.k_true},
                    {"n_id", s.n_id},
                    {"n_ood", s.n_ood},
                    {"noise_sigma", s.noise_sigma},
                    {"ood_scale", s.ood_scale},
                    {"seed", s.seed},
                    {"n_classes", s.n_classes}}}};
  write_json(opts.out_dir / "meta.json", meta);
}

// ---------------------------------------------------------------- ablate-t

std::vector<AblationRow> ablate_t(const SubspaceModel& model, const RowMatrix& id, const RowMatrix& ood,
                                  const std::vector<int>& t_list, const PerturbationConfig& base, unsigned threads) {
  auto wrap = [](const RowMatrix& m) {
    FeatureMatrix f;
    f.data = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) f.sample_ids.push_back(std::to_string(i));
    return f;
  };
  const FeatureMatrix id_f = wrap(id);
  const FeatureMatrix ood_f = wrap(ood);
  ScoringContext ctx;
  ctx.model = &model;

  std::vector<AblationRow> rows;
  for (int t : t_list) {
    if (t < 0) throw Error("T values must be >= 0");
    ScorerConfig cfg;
    cfg.scorer = Scorer::pocs;
    cfg.perturbation = base;
    cfg.perturbation.t_steps = t;
    const auto id_scores = values_of(score_batch(id_f, cfg, ctx, threads));
    const auto ood_scores = values_of(score_batch(ood_f, cfg, ctx, threads));
    rows.push_back({t, auroc(id_scores, ood_scores), aupr(id_scores, ood_scores), fpr_at_tpr(id_scores, ood_scores)});
  }
  return rows;
}

std::vector<AblationRow> run_ablate_t(const AblateOptions& opts) {
  if (opts.t_list.empty()) throw Error("T list is empty");
  for (int t : opts.t_list)
    if (t < 0) throw Error("T values must be >= 0");
  const Bundle bundle = load_bundle(opts.bundle_dir);
  const Dataset id = load_dataset(opts.id_dir);
  const Dataset ood = load_dataset(opts.ood_dir);
  if (id.features.dim() != bundle.model.dim() || ood.features.dim() != bundle.model.dim())
    throw Error("dataset dimension does not match the model (d = " + std::to_string(bundle.model.dim()) + ")");
  const auto rows = ablate_t(bundle.model, id.features.data, ood.features.data, opts.t_list, opts.perturbation, opts.threads);

  fs::create_directories(opts.out_dir);
  std::string table = "T,AUROC,AUPR,FPR@95\n";
  for (const auto& r : rows)
    table += std::to_string(r.t_steps) + "," + shortest(r.auroc) + "," + shortest(r.aupr) + "," + shortest(r.fpr_at_95) + "\n";
  write_text(opts.out_dir / "ablation.csv", table);

  const json meta{{"tool", "ocs"},
                  {"tool_version", kToolVersion},
                  {"command", "ablate-t"},
                  {"inputs",
                   {{"bundle_dir", opts.bundle_dir.string()},
                    {"bundle_hash", hash_directory(opts.bundle_dir)},
                    {"id_dir", opts.id_dir.string()},
                    {"id_hash", hash_directory(opts.id_dir)},
                    {"ood_dir", opts.ood_dir.string()},
                    {"ood_hash", hash_directory(opts.ood_dir)}}},
                  {"t_list", opts.t_list},
                  {"perturbation", perturbation_to_json(opts.perturbation)},
                  {"t0_fallback", "complement_norm"}};
  write_json(opts.out_dir / "meta.json", meta);
  return rows;
}

// ---------------------------------------------------------------- diagnose

void run_diagnose(const DiagnoseOptions& opts) {
  const Bundle bundle = load_bundle(opts.bundle_dir);
  const Dataset id = load_dataset(opts.id_dir);
  const Dataset ood = load_dataset(opts.ood_dir);
  const auto& model = bundle.model;
  if (opts.n_components < 1) throw Error("number of components must be >= 1");
  // the complement frame has only d - k directions
  const int n_components = std::min<int>(opts.n_components, static_cast<int>(model.complement_dim()));
  const auto id_frames = variance_diagnostics(model, id.features.data, n_components);
  const auto ood_frames = variance_diagnostics(model, ood.features.data, n_components);

  fs::create_directories(opts.out_dir);
  auto frame_csv = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::string text = "component_index,ratio_id,ratio_ood\n";
    for (std::size_t i = 0; i < a.size(); ++i) text += std::to_string(i) + "," + shortest(a[i]) + "," + shortest(b[i]) + "\n";
    return text;
  };
  write_text(opts.out_dir / "variance_id_basis.csv", frame_csv(id_frames.id_basis, ood_frames.id_basis));
  write_text(opts.out_dir / "variance_complement.csv", frame_csv(id_frames.complement, ood_frames.complement));

  std::string coords = "sample_id,set,pc_0,pc_1,perp_0,perp_1\n";
  const Eigen::Index kp = std::min<Eigen::Index>(2, model.basis_k.cols());
  const Eigen::Index mp = std::min<Eigen::Index>(2, model.basis_perp.cols());
  auto add = [&](const FeatureMatrix& f, const char* set) {
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      const Eigen::VectorXd z = f.data.row(i).transpose() - model.mu;
      const Eigen::VectorXd p = model.basis_k.leftCols(kp).transpose() * z;
      const Eigen::VectorXd q = model.basis_perp.leftCols(mp).transpose() * z;
      coords += csv_field(f.sample_ids[static_cast<std::size_t>(i)]) + "," + set;
      for (Eigen::Index j = 0; j < 2; ++j) coords += "," + (j < kp ? shortest(p(j)) : std::string("0"));
      for (Eigen::Index j = 0; j < 2; ++j) coords += "," + (j < mp ? shortest(q(j)) : std::string("0"));
      coords += "\n";
    }
  };
  add(id.features, "id");
  add(ood.features, "ood");
  write_text(opts.out_dir / "coordinates.csv", coords);

  const json meta{{"tool", "ocs"},
                  {"tool_version", kToolVersion},
                  {"command", "diagnose"},
                  {"inputs",
                   {{"bundle_hash", hash_directory(opts.bundle_dir)},
                    {"id_hash", hash_directory(opts.id_dir)},
                    {"ood_hash", hash_directory(opts.ood_dir)}}},
                  {"n_components", n_components},
                  {"degenerate",
                   {{"id_total", id_frames.degenerate_total},
                    {"id_complement", id_frames.degenerate_complement},
                    {"ood_total", ood_frames.degenerate_total},
                    {"ood_complement", ood_frames.degenerate_complement}}}};
  write_json(opts.out_dir / "meta.json", meta);
}

}  // namespace ocs::app
