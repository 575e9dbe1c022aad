#include "doctest.h"
#include "oracles.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "ocs/error.hpp"
#include "ocs/feature_store.hpp"
#include "ocs/npy.hpp"

namespace fs = std::filesystem;
using namespace ocs;

namespace {

FeatureMatrix make_matrix(Eigen::Index n, Eigen::Index d, std::mt19937_64& gen) {
  FeatureMatrix m;
  m.data = oracle::gaussian(n, d, gen);
  for (Eigen::Index i = 0; i < n; ++i) m.sample_ids.push_back(std::to_string(i));
  return m;
}

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string npy_bytes(const std::string& header_dict, std::size_t payload_bytes) {
  std::string h = header_dict;
  while ((10 + h.size() + 1) % 64) h += ' ';
  h += '\n';
  std::string out = "\x93NUMPY";
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(h.size() & 0xff);
  out += static_cast<char>(h.size() >> 8);
  out += h;
  out += std::string(payload_bytes, '\0');
  return out;
}

}  // namespace

TEST_CASE("csv parse: 2x3") {
  const auto dir = oracle::temp_dir("csv");
  write_raw(dir / "m.csv", "1,2,3\n4,5,6");
  const auto m = load_features(dir / "m.csv", Format::csv);
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 3);
  CHECK(m.data(1, 2) == 6.0);
  CHECK(m.sample_ids == std::vector<std::string>{"0", "1"});
}

TEST_CASE("csv rejects ragged rows, junk and non-finite values") {
  const auto dir = oracle::temp_dir("csvbad");
  write_raw(dir / "ragged.csv", "1,2,3\n4,5\n");
  CHECK_THROWS_AS(load_features(dir / "ragged.csv", Format::csv), Error);
  write_raw(dir / "junk.csv", "1,2\n3,x\n");
  CHECK_THROWS_AS(load_features(dir / "junk.csv", Format::csv), Error);
  write_raw(dir / "nan.csv", "1,2\n3,nan\n");
  CHECK_THROWS_AS(load_features(dir / "nan.csv", Format::csv), Error);
  write_raw(dir / "narrow.csv", "1\n2\n");
  CHECK_THROWS_AS(load_features(dir / "narrow.csv", Format::csv), Error);
}

TEST_CASE("npy with zero rows is rejected") {
  const auto dir = oracle::temp_dir("npy0");
  npy::write(dir / "empty.npy", npy::from_doubles({}, {0, 8}));
  CHECK_THROWS_WITH_AS(load_features(dir / "empty.npy", Format::npy), doctest::Contains("N >= 1"), Error);
}

TEST_CASE("npy header writer matches numpy layout") {
  const auto bytes = npy::serialize(npy::from_doubles(std::vector<double>(20, 1.0), {5, 4}, npy::DType::f32));
  CHECK((10 + (static_cast<std::size_t>(bytes[8]) | static_cast<std::size_t>(bytes[9]) << 8)) % 64 == 0);
  const std::string head(reinterpret_cast<const char*>(bytes.data()), 128);
  CHECK(head.find("{'descr': '<f4', 'fortran_order': False, 'shape': (5, 4), }") != std::string::npos);
  CHECK(head.back() == '\n');
  CHECK(bytes.size() == 128 + 20 * 4);

  const auto one_d = npy::serialize(npy::from_doubles(std::vector<double>(3, 0.0), {3}));
  const std::string h1(reinterpret_cast<const char*>(one_d.data()), 64);
  CHECK(h1.find("'shape': (3,)") != std::string::npos);
}

TEST_CASE("npy header parser accepts numpy-written headers and rejects unsupported ones") {
  const auto dir = oracle::temp_dir("npyhdr");
  write_raw(dir / "ok.npy", npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }", 48));
  const auto a = npy::read(dir / "ok.npy");
  CHECK(a.shape == std::vector<std::size_t>{2, 3});
  CHECK(a.dtype == npy::DType::f64);

  write_raw(dir / "fortran.npy", npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 3), }", 48));
  CHECK_THROWS_AS(npy::read(dir / "fortran.npy"), Error);
  write_raw(dir / "big.npy", npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (2, 3), }", 48));
  CHECK_THROWS_AS(npy::read(dir / "big.npy"), Error);
  write_raw(dir / "c.npy", npy_bytes("{'descr': '<c16', 'fortran_order': False, 'shape': (2, 3), }", 96));
  CHECK_THROWS_AS(npy::read(dir / "c.npy"), Error);
  write_raw(dir / "3d.npy", npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3, 1), }", 48));
  CHECK_THROWS_AS(npy::read(dir / "3d.npy"), Error);
  write_raw(dir / "short.npy", npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }", 40));
  CHECK_THROWS_AS(npy::read(dir / "short.npy"), Error);
  write_raw(dir / "magic.npy", "\x93NUMPZ\x01\x00\x00\x00");
  CHECK_THROWS_AS(npy::read(dir / "magic.npy"), Error);
  CHECK_THROWS_AS(npy::read(dir / "missing.npy"), Error);
}

TEST_CASE("f32 C-order (5,4) payload survives load/save bit for bit") {
  const auto dir = oracle::temp_dir("f32");
  std::mt19937_64 gen(3);
  std::normal_distribution<float> n;
  std::vector<double> values;
  for (int i = 0; i < 20; ++i) values.push_back(static_cast<double>(n(gen)));
  npy::write(dir / "in.npy", npy::from_doubles(values, {5, 4}, npy::DType::f32));

  const auto m = load_features(dir / "in.npy", Format::npy);
  CHECK(m.storage_dtype == npy::DType::f32);
  save_features(m, dir / "out.npy", Format::npy);
  const auto in = oracle::file_bytes(dir / "in.npy");
  const auto out = oracle::file_bytes(dir / "out.npy");
  REQUIRE(in.size() == out.size());
  CHECK(std::memcmp(in.data() + 128, out.data() + 128, 80) == 0);
  CHECK(in == out);
}

TEST_CASE("property: npy round trip is exact for random shapes and dtypes") {
  const auto dir = oracle::temp_dir("npyprop");
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> rows(1, 40), cols(2, 33), kind(0, 1);
  for (int trial = 0; trial < 60; ++trial) {
    auto m = make_matrix(rows(gen), cols(gen), gen);
    m.data *= std::pow(10.0, trial % 7 - 3);
    if (kind(gen)) {
      m.storage_dtype = npy::DType::f32;
      m.data = m.data.cast<float>().cast<double>();
    }
    save_features(m, dir / "m.npy", Format::npy);
    const auto back = load_features(dir / "m.npy", Format::npy);
    CHECK(back.storage_dtype == m.storage_dtype);
    CHECK(back.data == m.data);
  }
}

TEST_CASE("csv round trip is exact, including pi-valued entries") {
  const auto dir = oracle::temp_dir("csvrt");
  FeatureMatrix m;
  m.data = RowMatrix::Constant(3, 4, std::numbers::pi);
  m.data(1, 2) = -std::numbers::pi * 1e-7;
  m.data(2, 3) = std::numbers::pi * 1e12;
  m.sample_ids = {"a", "b", "c"};
  save_features(m, dir / "pi.csv", Format::csv);
  const auto back = load_features(dir / "pi.csv", Format::csv);
  CHECK((back.data - m.data).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 gen(5);
  const auto r = make_matrix(10, 6, gen);
  save_features(r, dir / "r.csv", Format::csv);
  CHECK(load_features(dir / "r.csv", Format::csv).data == r.data);
}

TEST_CASE("save validates before touching the file system") {
  const auto dir = oracle::temp_dir("val");
  std::mt19937_64 gen(1);
  auto m = make_matrix(4, 3, gen);
  m.class_labels = std::vector<std::int64_t>{0, 1, 0};
  CHECK_THROWS_WITH_AS(save_features(m, dir / "bad.npy", Format::npy), doctest::Contains("labels length"), Error);
  CHECK_FALSE(fs::exists(dir / "bad.npy"));
  CHECK_THROWS_AS(save_dataset({m, std::nullopt}, dir / "ds"), Error);
  CHECK_FALSE(fs::exists(dir / "ds"));

  m.class_labels.reset();
  m.logits = RowMatrix::Zero(3, 2);
  CHECK_THROWS_AS(m.validate(), Error);
  m.logits = RowMatrix::Zero(4, 1);
  CHECK_THROWS_AS(m.validate(), Error);
  m.logits.reset();
  m.data(2, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("dataset directory round trip with companions") {
  const auto dir = oracle::temp_dir("ds");
  std::mt19937_64 gen(2);
  Dataset ds;
  ds.features = make_matrix(6, 5, gen);
  ds.features.sample_ids = {"img_a", "img_b", "img_c", "img_d", "img_e", "img_f"};
  ds.features.class_labels = std::vector<std::int64_t>{0, 1, 2, 0, 1, 2};
  ds.features.logits = oracle::gaussian(6, 3, gen);
  ds.head = LinearHead{oracle::gaussian(3, 5, gen), oracle::gaussian_vector(3, gen)};
  save_dataset(ds, dir);

  const auto back = load_dataset(dir);
  CHECK(back.features.data == ds.features.data);
  CHECK(back.features.sample_ids == ds.features.sample_ids);
  CHECK(*back.features.class_labels == *ds.features.class_labels);
  CHECK(*back.features.logits == *ds.features.logits);
  REQUIRE(back.head);
  CHECK(back.head->weights == ds.head->weights);
  CHECK(back.head->bias == ds.head->bias);
}

TEST_CASE("dataset companions must agree with the feature matrix") {
  const auto dir = oracle::temp_dir("dsbad");
  std::mt19937_64 gen(4);
  Dataset ds{make_matrix(5, 4, gen), std::nullopt};
  save_dataset(ds, dir);

  const std::vector<std::int64_t> labels{0, 1, 0};
  npy::write(dir / "labels.npy", npy::from_ints(labels, {3}));
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("labels length"), Error);
  fs::remove(dir / "labels.npy");

  npy::write(dir / "logits.npy", npy::from_doubles(std::vector<double>(8, 0.0), {4, 2}));
  CHECK_THROWS_AS(load_dataset(dir), Error);
  fs::remove(dir / "logits.npy");

  npy::write(dir / "head_w.npy", npy::from_doubles(std::vector<double>(6, 0.0), {2, 3}));
  npy::write(dir / "head_b.npy", npy::from_doubles(std::vector<double>(2, 0.0), {2}));
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("head_w.npy"), Error);
  fs::remove(dir / "head_b.npy");
  CHECK_THROWS_AS(load_dataset(dir), Error);
}

TEST_CASE("synthetic: noise-free ID data is exactly k_true dimensional") {
  SyntheticSpec spec;
  spec.d = 16;
  spec.k_true = 3;
  spec.n_id = 50;
  spec.noise_sigma = 0.0;
  spec.seed = 9;
  const auto data = generate_synthetic(spec);
  const RowMatrix& x = data.id.features.data;
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(centered).singularValues();
  for (Eigen::Index i = spec.k_true; i < s.size(); ++i) CHECK(s(i) <= 1e-10);
  CHECK(s(spec.k_true - 1) > 1.0);
  // numerical rank at tol 1e-8
  CHECK((s.array() > 1e-8 * s(0)).count() <= spec.k_true);
}

TEST_CASE("synthetic: generation is a pure function of its parameters") {
  SyntheticSpec spec;
  spec.seed = 77;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  const auto dir = oracle::temp_dir("synth");
  save_dataset(a.id, dir / "a");
  save_dataset(b.id, dir / "b");
  save_dataset(a.ood, dir / "ao");
  save_dataset(b.ood, dir / "bo");
  for (const char* f : {"features.npy", "labels.npy", "head_w.npy", "head_b.npy", "sample_ids.txt"})
    CHECK(oracle::file_bytes(dir / "a" / f) == oracle::file_bytes(dir / "b" / f));
  CHECK(oracle::file_bytes(dir / "ao" / "features.npy") == oracle::file_bytes(dir / "bo" / "features.npy"));

  spec.seed = 78;
  CHECK(generate_synthetic(spec).id.features.data != a.id.features.data);
}

TEST_CASE("synthetic: ID variance concentrates in the top k_true components") {
  SyntheticSpec spec;
  spec.d = 32;
  spec.k_true = 4;
  spec.n_id = 200;
  spec.noise_sigma = 0.01;
  spec.seed = 1;
  const auto data = generate_synthetic(spec);
  const Eigen::VectorXd ev = oracle::covariance_eigenvalues_desc(data.id.features.data);
  CHECK(ev.head(4).sum() / ev.sum() > 0.99);

  // labels come from the head's argmax and cover every class
  const auto& labels = *data.id.features.class_labels;
  std::set<std::int64_t> seen(labels.begin(), labels.end());
  CHECK(seen.size() == 4);
  REQUIRE(data.id.head);
  CHECK(data.id.head->classes() == 4);
  CHECK_FALSE(data.ood.features.class_labels.has_value());
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.k_true = spec.d;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = {};
  spec.noise_sigma = -1;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = {};
  spec.ood_scale = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
  spec = {};
  spec.k_true = 1;
  const auto one = generate_synthetic(spec);
  CHECK(one.id.head->classes() == 2);
}
