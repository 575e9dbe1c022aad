#include "ocs/npy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ocs/error.hpp"

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace ocs::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

DType parse_descr(const std::string& d) {
  if (d == "<f4") return DType::f32;
  if (d == "<f8") return DType::f64;
  if (d == "<i4") return DType::i32;
  if (d == "<i8") return DType::i64;
  throw Error("npy: unsupported dtype '" + d + "' (expected <f4, <f8, <i4 or <i8)");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Returns the raw text after `'key':` up to the next top-level comma or brace.
std::string header_value(const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) throw Error("npy: header is missing '" + key + "'");
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) throw Error("npy: malformed header near '" + key + "'");
  ++pos;
  int depth = 0;
  std::size_t end = pos;
  for (; end < header.size(); ++end) {
    const char c = header[end];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
    if (depth < 0) throw Error("npy: malformed header");
  }
  return trim(header.substr(pos, end - pos));
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')')
    throw Error("npy: malformed shape '" + text + "'");
  std::vector<std::size_t> shape;
  std::stringstream ss(text.substr(1, text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item.find_first_not_of("0123456789") != std::string::npos)
      throw Error("npy: malformed shape entry '" + item + "'");
    shape.push_back(std::stoull(item));
  }
  if (shape.empty() || shape.size() > 2)
    throw Error("npy: only 1-D and 2-D arrays are supported");
  return shape;
}

template <class T>
T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <class T>
void store_le(std::byte* p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

}  // namespace

std::string descr(DType t) {
  switch (t) {
    case DType::f32: return "<f4";
    case DType::f64: return "<f8";
    case DType::i32: return "<i4";
    case DType::i64: return "<i8";
  }
  return "<f8";
}

std::size_t item_size(DType t) {
  switch (t) {
    case DType::f32:
    case DType::i32: return 4;
    case DType::f64:
    case DType::i64: return 8;
  }
  return 8;
}

std::size_t Array::size() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return shape.empty() ? 0 : n;
}

std::vector<double> Array::to_doubles() const {
  const std::size_t n = size();
  std::vector<double> out(n);
  const std::byte* p = payload.data();
  const std::size_t w = item_size(dtype);
  for (std::size_t i = 0; i < n; ++i, p += w) {
    switch (dtype) {
      case DType::f32: out[i] = static_cast<double>(load_le<float>(p)); break;
      case DType::f64: out[i] = load_le<double>(p); break;
      case DType::i32: out[i] = static_cast<double>(load_le<std::int32_t>(p)); break;
      case DType::i64: out[i] = static_cast<double>(load_le<std::int64_t>(p)); break;
    }
  }
  return out;
}

std::vector<std::int64_t> Array::to_ints() const {
  const std::size_t n = size();
  std::vector<std::int64_t> out(n);
  const std::byte* p = payload.data();
  const std::size_t w = item_size(dtype);
  for (std::size_t i = 0; i < n; ++i, p += w) {
    switch (dtype) {
      case DType::i32: out[i] = load_le<std::int32_t>(p); break;
      case DType::i64: out[i] = load_le<std::int64_t>(p); break;
      case DType::f32:
      case DType::f64: {
        const double v = dtype == DType::f32 ? load_le<float>(p) : load_le<double>(p);
        if (!std::isfinite(v) || v != std::floor(v))
          throw Error("npy: expected integral values, found " + std::to_string(v));
        out[i] = static_cast<std::int64_t>(v);
        break;
      }
    }
  }
  return out;
}

Array parse(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw Error("npy: bad magic string");
  const auto major = static_cast<unsigned>(bytes[6]);
  const auto minor = static_cast<unsigned>(bytes[7]);
  if (major != 1 || minor != 0)
    throw Error("npy: unsupported format version " + std::to_string(major) + "." + std::to_string(minor));
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
  const std::size_t data_offset = 10 + header_len;
  if (bytes.size() < data_offset) throw Error("npy: truncated header");
  const std::string header(reinterpret_cast<const char*>(bytes.data() + 10), header_len);
  if (header.find('{') == std::string::npos || header.find('}') == std::string::npos)
    throw Error("npy: malformed header dictionary");

  std::string d = header_value(header, "descr");
  if (d.size() < 2 || (d.front() != '\'' && d.front() != '"')) throw Error("npy: malformed descr");
  d = d.substr(1, d.size() - 2);
  if (d.size() == 3 && d[0] == '|' ) d[0] = '<';
  if (!d.empty() && d[0] == '>') throw Error("npy: big-endian arrays are not supported");

  Array a;
  a.dtype = parse_descr(d);
  const std::string fortran = header_value(header, "fortran_order");
  if (fortran != "False") throw Error("npy: only C-order (fortran_order=False) arrays are supported");
  a.shape = parse_shape(header_value(header, "shape"));

  const std::size_t nbytes = a.size() * item_size(a.dtype);
  if (bytes.size() - data_offset != nbytes)
    throw Error("npy: payload size " + std::to_string(bytes.size() - data_offset) +
                " does not match shape (expected " + std::to_string(nbytes) + " bytes)");
  a.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_offset), bytes.end());
  return a;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("npy: cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse(std::as_bytes(std::span(raw)));
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " [" + path.string() + "]");
  }
}

std::vector<std::byte> serialize(const Array& array) {
  if (array.shape.empty() || array.shape.size() > 2) throw Error("npy: only 1-D and 2-D arrays are supported");
  if (array.payload.size() != array.size() * item_size(array.dtype))
    throw Error("npy: payload does not match shape");
  std::string shape = "(" + std::to_string(array.shape[0]) + ",";
  if (array.shape.size() == 2) shape += " " + std::to_string(array.shape[1]);
  shape += ")";
  std::string header = "{'descr': '" + descr(array.dtype) + "', 'fortran_order': False, 'shape': " + shape + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((kAlign - unpadded % kAlign) % kAlign, ' ');
  header.push_back('\n');

  std::vector<std::byte> out;
  out.reserve(10 + header.size() + array.payload.size());
  for (std::size_t i = 0; i < kMagicLen; ++i) out.push_back(static_cast<std::byte>(kMagic[i]));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(header.size() & 0xff));
  out.push_back(static_cast<std::byte>((header.size() >> 8) & 0xff));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  out.insert(out.end(), array.payload.begin(), array.payload.end());
  return out;
}

void write(const std::filesystem::path& path, const Array& array) {
  const auto bytes = serialize(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("npy: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("npy: write failed for " + path.string());
}

Array from_doubles(std::span<const double> values, std::vector<std::size_t> shape, DType dtype) {
  Array a;
  a.dtype = dtype;
  a.shape = std::move(shape);
  if (a.size() != values.size()) throw Error("npy: value count does not match shape");
  const std::size_t w = item_size(dtype);
  a.payload.resize(values.size() * w);
  std::byte* p = a.payload.data();
  for (double v : values) {
    switch (dtype) {
      case DType::f32: store_le(p, static_cast<float>(v)); break;
      case DType::f64: store_le(p, v); break;
      case DType::i32: store_le(p, static_cast<std::int32_t>(v)); break;
      case DType::i64: store_le(p, static_cast<std::int64_t>(v)); break;
    }
    p += w;
  }
  return a;
}

Array from_ints(std::span<const std::int64_t> values, std::vector<std::size_t> shape, DType dtype) {
  Array a;
  a.dtype = dtype;
  a.shape = std::move(shape);
  if (a.size() != values.size()) throw Error("npy: value count does not match shape");
  const std::size_t w = item_size(dtype);
  a.payload.resize(values.size() * w);
  std::byte* p = a.payload.data();
  for (auto v : values) {
    switch (dtype) {
      case DType::f32: store_le(p, static_cast<float>(v)); break;
      case DType::f64: store_le(p, static_cast<double>(v)); break;
      case DType::i32: store_le(p, static_cast<std::int32_t>(v)); break;
      case DType::i64: store_le(p, v); break;
    }
    p += w;
  }
  return a;
}

}  // namespace ocs::npy
