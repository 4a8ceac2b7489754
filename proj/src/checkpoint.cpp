#include "dcgn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dcgn {

namespace {

constexpr std::size_t kMagicLength = sizeof(kCheckpointMagic) - 1;
constexpr std::uint32_t kMaxExtent = 1u << 20;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw InvalidInput("checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_le<double>(out, m(r, c));
  }
}

Matrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_le<double>(in);
  }
  return m;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& layers = ckpt.network.layers;
  if (layers.empty()) throw InvalidInput("cannot write a checkpoint without layers");
  const auto k = ckpt.network.output_dim();
  const auto d = ckpt.network.input_dim();
  if (ckpt.mixture.k() != k || ckpt.mixture.dim() != d || ckpt.mixture.weights.size() != k ||
      static_cast<int>(ckpt.mixture.covariances.size()) != k) {
    throw InvalidInput("mixture shape does not match the network");
  }

  out.write(kCheckpointMagic, kMagicLength);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weights.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weights.cols()));
    put_matrix(out, layer.weights);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_le<double>(out, layer.bias(i));
  }
  for (Eigen::Index i = 0; i < k; ++i) put_le<double>(out, ckpt.mixture.weights(i));
  put_matrix(out, ckpt.mixture.means);
  for (const auto& sigma : ckpt.mixture.covariances) put_matrix(out, sigma);
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, kMagicLength> magic{};
  if (!in.read(magic.data(), magic.size()) ||
      std::memcmp(magic.data(), kCheckpointMagic, kMagicLength) != 0) {
    throw InvalidInput("not a checkpoint file (bad magic)");
  }
  const auto n_layers = get_le<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 64) throw InvalidInput("checkpoint layer count is implausible");

  Checkpoint ckpt;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    if (rows == 0 || cols == 0 || rows > kMaxExtent || cols > kMaxExtent) {
      throw InvalidInput("checkpoint layer shape is implausible");
    }
    if (l > 0 && static_cast<Eigen::Index>(cols) != ckpt.network.layers.back().weights.rows()) {
      throw InvalidInput("checkpoint layers do not chain");
    }
    DenseLayer layer;
    layer.weights = get_matrix(in, rows, cols);
    layer.bias.resize(rows);
    for (std::uint32_t i = 0; i < rows; ++i) layer.bias(i) = get_le<double>(in);
    ckpt.network.layers.push_back(std::move(layer));
  }

  const Eigen::Index k = ckpt.network.output_dim();
  const Eigen::Index d = ckpt.network.input_dim();
  ckpt.mixture.weights.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) ckpt.mixture.weights(i) = get_le<double>(in);
  ckpt.mixture.means = get_matrix(in, k, d);
  for (Eigen::Index i = 0; i < k; ++i) ckpt.mixture.covariances.push_back(get_matrix(in, d, d));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InvalidInput("checkpoint has trailing bytes");
  }
  if (!ckpt.network.all_finite()) throw InvalidInput("checkpoint holds non-finite weights");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace dcgn
