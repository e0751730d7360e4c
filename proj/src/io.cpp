#include "uniflg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uniflg::io {
namespace {

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::string origin) : b_(b), origin_(std::move(origin)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw std::runtime_error("truncated file " + origin_);
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensor(const TensorFile& t) {
  if (t.rank < 1 || t.rank > 3) throw std::invalid_argument("tensor rank must be 1..3");
  if (t.data.size() != t.element_count())
    throw std::invalid_argument("tensor data size does not match dims");
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * t.data.size());
  out.push_back('U');
  out.push_back('F');
  out.push_back('T');
  out.push_back(static_cast<std::uint8_t>(t.rank));
  for (int i = 0; i < 3; ++i) put<std::uint32_t>(out, i < t.rank ? t.dims[i] : 1u);
  const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
  out.insert(out.end(), p, p + 4 * t.data.size());
  return out;
}

TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 16 || bytes[0] != 'U' || bytes[1] != 'F' || bytes[2] != 'T')
    throw std::runtime_error("not a tensor file: " + origin);
  TensorFile t;
  t.rank = bytes[3];
  if (t.rank < 1 || t.rank > 3) throw std::runtime_error("bad tensor rank in " + origin);
  Reader r(bytes, origin);
  r.get<std::uint32_t>();
  for (int i = 0; i < 3; ++i) t.dims[i] = r.get<std::uint32_t>();
  for (int i = t.rank; i < 3; ++i)
    if (t.dims[i] != 1) throw std::runtime_error("unused tensor dim must be 1 in " + origin);
  const std::size_t n = t.element_count();
  if (bytes.size() != 16 + 4 * n)
    throw std::runtime_error("tensor payload size mismatch in " + origin);
  t.data.resize(n);
  std::memcpy(t.data.data(), bytes.data() + 16, 4 * n);
  return t;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, const TensorFile& t) {
  write_bytes(path, encode_tensor(t));
}

TensorFile read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_bytes(path), path.string());
}

TensorFile matrix_tensor(const Matrix& m) {
  TensorFile t;
  t.rank = 2;
  t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols), 1};
  t.data.assign(m.data.begin(), m.data.end());
  return t;
}

TensorFile landmark_tensor(const Matrix& y) {
  if (y.cols % 2 != 0) throw std::invalid_argument("landmark matrix must have 2N columns");
  TensorFile t;
  t.rank = 3;
  t.dims = {static_cast<std::uint32_t>(y.rows), static_cast<std::uint32_t>(y.cols / 2), 2};
  t.data.assign(y.data.begin(), y.data.end());
  return t;
}

Matrix tensor_matrix(const TensorFile& t) {
  if (t.rank == 1) throw std::invalid_argument("rank-1 tensor is not a matrix");
  Matrix m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1] * t.dims[2]));
  for (std::size_t i = 0; i < t.data.size(); ++i) m.data[i] = t.data[i];
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const nn::ParamStore& store,
                     const std::string& config_json) {
  std::vector<std::uint8_t> out = {'U', 'F', 'C', 'K'};
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config_json.size());
  out.insert(out.end(), config_json.begin(), config_json.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.all().size()));
  for (const Parameter& p : store.all()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols));
    for (double v : p.value.data) put<double>(out, v);
  }
  write_bytes(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  Reader r(bytes, path.string());
  if (r.str(4) != "UFCK") throw std::runtime_error("not a checkpoint: " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_json = r.str(r.get<std::uint64_t>());
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    Parameter p;
    p.name = r.str(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    p.value = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    for (double& v : p.value.data) v = r.get<double>();
    ck.params.push_back(std::move(p));
  }
  return ck;
}

void load_into(const Checkpoint& ckpt, nn::ParamStore& store) {
  if (ckpt.params.size() != store.all().size())
    throw std::runtime_error("checkpoint has " + std::to_string(ckpt.params.size()) +
                             " parameters, model expects " + std::to_string(store.all().size()));
  for (const Parameter& src : ckpt.params) {
    Parameter* dst = store.find(src.name);
    if (dst == nullptr) throw std::runtime_error("checkpoint parameter not in model: " + src.name);
    if (!dst->value.same_shape(src.value))
      throw std::runtime_error("checkpoint shape mismatch for " + src.name);
    dst->value = src.value;
  }
}

}  // namespace uniflg::io
