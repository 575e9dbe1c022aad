#include "ocs/feature_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ocs/error.hpp"
#include "ocs/rng.hpp"

namespace ocs {
namespace fs = std::filesystem;

namespace {

bool all_finite(const RowMatrix& m) { return m.allFinite(); }

RowMatrix matrix_from(const npy::Array& a, const std::string& what) {
  if (a.shape.size() != 2) throw Error(what + ": expected a 2-D array");
  const auto values = a.to_doubles();
  RowMatrix m(static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

npy::Array array_from(const RowMatrix& m, npy::DType dtype) {
  return npy::from_doubles(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
                           {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, dtype);
}

std::vector<std::string> index_ids(Eigen::Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

RowMatrix parse_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open " + path.string());
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Eigen::Index count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      field = b == std::string::npos ? std::string{} : field.substr(b, e - b + 1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw Error("csv: cannot parse '" + field + "' at line " + std::to_string(lineno) + " of " + path.string());
      values.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols >= 0 && count != cols)
      throw Error("csv: line " + std::to_string(lineno) + " has " + std::to_string(count) + " fields, expected " +
                  std::to_string(cols));
    cols = count;
    ++rows;
  }
  RowMatrix m(rows, std::max<Eigen::Index>(cols, 0));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_csv(const RowMatrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("csv: cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("csv: write failed for " + path.string());
}

}  // namespace

void FeatureMatrix::validate() const {
  if (data.rows() < 1) throw Error("feature matrix must have at least one row (N >= 1)");
  if (data.cols() < 2) throw Error("feature matrix must have at least two columns (d >= 2)");
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (!data.row(i).allFinite()) throw Error("feature row " + std::to_string(i) + " contains NaN or Inf");
  if (sample_ids.size() != static_cast<std::size_t>(data.rows()))
    throw Error("sample_ids length " + std::to_string(sample_ids.size()) + " does not match N = " +
                std::to_string(data.rows()));
  if (class_labels) {
    if (class_labels->size() != static_cast<std::size_t>(data.rows()))
      throw Error("labels length " + std::to_string(class_labels->size()) + " does not match N = " +
                  std::to_string(data.rows()));
    for (auto l : *class_labels)
      if (l < 0) throw Error("class labels must be >= 0");
  }
  if (logits) {
    if (logits->rows() != data.rows())
      throw Error("logits have " + std::to_string(logits->rows()) + " rows, expected N = " +
                  std::to_string(data.rows()));
    if (logits->cols() < 2) throw Error("logits must have at least two classes");
    if (!all_finite(*logits)) throw Error("logits contain NaN or Inf");
  }
}

void LinearHead::validate() const {
  if (weights.rows() < 2) throw Error("linear head needs at least two classes");
  if (bias.size() != weights.rows())
    throw Error("linear head bias length " + std::to_string(bias.size()) + " does not match C = " +
                std::to_string(weights.rows()));
  if (!weights.allFinite() || !bias.allFinite()) throw Error("linear head contains NaN or Inf");
}

Eigen::VectorXd LinearHead::apply(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != weights.cols())
    throw Error("linear head expects d = " + std::to_string(weights.cols()) + ", got " + std::to_string(z.size()));
  return weights * z + bias;
}

Format format_from_path(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".npy") return Format::npy;
  if (ext == ".csv") return Format::csv;
  throw Error("cannot infer format from '" + path.string() + "' (expected .npy or .csv)");
}

FeatureMatrix load_features(const fs::path& path, Format format) {
  FeatureMatrix m;
  if (format == Format::npy) {
    const auto a = npy::read(path);
    if (a.shape.size() != 2) throw Error("features must be a 2-D array [" + path.string() + "]");
    if (a.dtype != npy::DType::f32 && a.dtype != npy::DType::f64)
      throw Error("features must be f32 or f64 [" + path.string() + "]");
    m.data = matrix_from(a, "features");
    m.storage_dtype = a.dtype;
  } else {
    m.data = parse_csv(path);
  }
  m.sample_ids = index_ids(m.data.rows());
  m.validate();
  return m;
}

void save_features(const FeatureMatrix& m, const fs::path& path, Format format) {
  m.validate();
  if (format == Format::npy)
    npy::write(path, array_from(m.data, m.storage_dtype));
  else
    write_csv(m.data, path);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("dataset directory not found: " + dir.string());
  Dataset ds;
  ds.features = load_features(dir / "features.npy", Format::npy);

  if (fs::exists(dir / "sample_ids.txt")) {
    std::ifstream in(dir / "sample_ids.txt");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ids.push_back(line);
    }
    ds.features.sample_ids = std::move(ids);
  }
  if (fs::exists(dir / "labels.npy")) {
    const auto a = npy::read(dir / "labels.npy");
    if (a.shape.size() != 1 && !(a.shape.size() == 2 && a.shape[1] == 1))
      throw Error("labels.npy must be 1-D");
    ds.features.class_labels = a.to_ints();
  }
  if (fs::exists(dir / "logits.npy")) ds.features.logits = matrix_from(npy::read(dir / "logits.npy"), "logits");

  const bool has_w = fs::exists(dir / "head_w.npy");
  const bool has_b = fs::exists(dir / "head_b.npy");
  if (has_w != has_b) throw Error("head_w.npy and head_b.npy must be provided together");
  if (has_w) {
    LinearHead head;
    head.weights = matrix_from(npy::read(dir / "head_w.npy"), "head_w");
    const auto b = npy::read(dir / "head_b.npy");
    if (b.shape.size() != 1) throw Error("head_b.npy must be 1-D");
    const auto bias = b.to_doubles();
    head.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    head.validate();
    if (head.weights.cols() != ds.features.dim())
      throw Error("head_w.npy has " + std::to_string(head.weights.cols()) + " columns, features have d = " +
                  std::to_string(ds.features.dim()));
    ds.head = std::move(head);
  }
  ds.features.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.features.validate();
  if (ds.head) {
    ds.head->validate();
    if (ds.head->weights.cols() != ds.features.dim()) throw Error("head dimension does not match features");
  }
  fs::create_directories(dir);
  save_features(ds.features, dir / "features.npy", Format::npy);
  {
    std::ofstream out(dir / "sample_ids.txt", std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "sample_ids.txt").string());
    for (const auto& id : ds.features.sample_ids) out << id << '\n';
  }
  if (ds.features.class_labels) {
    const auto& l = *ds.features.class_labels;
    npy::write(dir / "labels.npy", npy::from_ints(l, {l.size()}));
  }
  if (ds.features.logits) npy::write(dir / "logits.npy", array_from(*ds.features.logits, npy::DType::f64));
  if (ds.head) {
    npy::write(dir / "head_w.npy", array_from(ds.head->weights, npy::DType::f64));
    const auto& b = ds.head->bias;
    npy::write(dir / "head_b.npy",
               npy::from_doubles(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())),
                                 {static_cast<std::size_t>(b.size())}));
  }
}

void SyntheticSpec::validate() const {
  if (d < 2) throw Error("synthetic: d must be >= 2");
  if (k_true < 1 || k_true >= d) throw Error("synthetic: need 1 <= k_true < d");
  if (n_id < 1 || n_ood < 1) throw Error("synthetic: sample counts must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error("synthetic: noise_sigma must be >= 0");
  if (!(ood_scale > 0.0)) throw Error("synthetic: ood_scale must be > 0");
  if (n_classes < 2) throw Error("synthetic: n_classes must be >= 2");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.d;
  const Eigen::Index k = spec.k_true;

  CounterRng frame_rng(derive_stream(spec.seed, 0x5f, 1));
  Eigen::MatrixXd gauss(d, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < d; ++i) gauss(i, j) = frame_rng.normal();
  const Eigen::MatrixXd frame = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ() *
                                Eigen::MatrixXd::Identity(d, k);

  const Eigen::Index classes = k == 1 ? 2 : std::clamp<Eigen::Index>(spec.n_classes, 2, k);
  LinearHead head;
  head.weights.resize(classes, d);
  for (Eigen::Index c = 0; c < classes; ++c) {
    const double sign = (k == 1 && c == 1) ? -1.0 : 1.0;
    head.weights.row(c) = sign * frame.col(c % k).transpose();
  }
  head.bias = Eigen::VectorXd::Zero(classes);

  SyntheticData out;
  {
    CounterRng rng(derive_stream(spec.seed, 0x5f, 2));
    FeatureMatrix& m = out.id.features;
    m.data.resize(spec.n_id, d);
    std::vector<std::int64_t> labels(static_cast<std::size_t>(spec.n_id));
    Eigen::VectorXd coeff(k);
    for (Eigen::Index i = 0; i < spec.n_id; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) coeff(j) = rng.normal();
      Eigen::VectorXd row = frame * coeff;
      for (Eigen::Index j = 0; j < d; ++j) row(j) += spec.noise_sigma * rng.normal();
      m.data.row(i) = row.transpose();
      Eigen::Index best = 0;
      head.apply(row).maxCoeff(&best);
      labels[static_cast<std::size_t>(i)] = best;
      m.sample_ids.push_back("id_" + std::to_string(i));
    }
    m.class_labels = std::move(labels);
  }
  {
    CounterRng rng(derive_stream(spec.seed, 0x5f, 3));
    FeatureMatrix& m = out.ood.features;
    m.data.resize(spec.n_ood, d);
    for (Eigen::Index i = 0; i < spec.n_ood; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) m.data(i, j) = spec.ood_scale * rng.normal();
      m.sample_ids.push_back("ood_" + std::to_string(i));
    }
  }
  out.id.head = head;
  out.ood.head = std::move(head);
  return out;
}

}  // namespace ocs
