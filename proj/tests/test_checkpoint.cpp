#include "dcgn/checkpoint.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace dcgn {
namespace {

Checkpoint random_checkpoint(std::uint64_t seed, int k) {
  std::mt19937_64 rng(seed);
  Checkpoint c;
  c.network = init_network(3, k, rng);
  std::normal_distribution<double> b(0.0, 1.0);
  for (auto& layer : c.network.layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = b(rng);
  }
  c.mixture = testing::random_mixture(rng, k, 3);
  return c;
}

std::string encode(const Checkpoint& c) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, c);
  return out.str();
}

Checkpoint decode(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_checkpoint(in);
}

std::uint32_t u32_at(const std::string& bytes, std::size_t offset) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

double f64_at(const std::string& bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = bits << 8 | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
  }
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

TEST(CheckpointTest, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Checkpoint c = random_checkpoint(seed, 2 + static_cast<int>(seed % 4));
    const Checkpoint back = decode(encode(c));
    EXPECT_EQ(back.network, c.network);
    EXPECT_EQ(back.mixture.weights, c.mixture.weights);
    EXPECT_EQ(back.mixture.means, c.mixture.means);
    EXPECT_EQ(back.mixture.covariances, c.mixture.covariances);
  }
}

TEST(CheckpointTest, ByteLayout) {
  const Checkpoint c = random_checkpoint(3, 3);
  const std::string bytes = encode(c);
  ASSERT_EQ(bytes.substr(0, 5), "CGMM1");
  EXPECT_EQ(u32_at(bytes, 5), 3u);
  // First layer: 32 x 3, weights row-major then 32 biases.
  EXPECT_EQ(u32_at(bytes, 9), 32u);
  EXPECT_EQ(u32_at(bytes, 13), 3u);
  const std::size_t w0 = 17;
  EXPECT_EQ(f64_at(bytes, w0), c.network.layers[0].weights(0, 0));
  EXPECT_EQ(f64_at(bytes, w0 + 8), c.network.layers[0].weights(0, 1));
  EXPECT_EQ(f64_at(bytes, w0 + 3 * 8), c.network.layers[0].weights(1, 0));
  EXPECT_EQ(f64_at(bytes, w0 + 96 * 8), c.network.layers[0].bias(0));

  std::size_t expected = 5 + 4;
  for (const auto& layer : c.network.layers) {
    expected += 8 + 8 * static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  const std::size_t mixture_start = expected;
  expected += 8 * (3 + 9 + 3 * 9);
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(f64_at(bytes, mixture_start), c.mixture.weights(0));
  EXPECT_EQ(f64_at(bytes, mixture_start + 3 * 8), c.mixture.means(0, 0));
  EXPECT_EQ(f64_at(bytes, mixture_start + 4 * 8), c.mixture.means(0, 1));
  EXPECT_EQ(f64_at(bytes, mixture_start + 12 * 8 + 8), c.mixture.covariances[0](0, 1));
}

TEST(CheckpointTest, RejectsCorruptInput) {
  const std::string good = encode(random_checkpoint(1, 3));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode(bad_magic), InvalidInput);
  EXPECT_THROW(decode(good.substr(0, good.size() - 1)), InvalidInput);
  EXPECT_THROW(decode(good + "x"), InvalidInput);
  EXPECT_THROW(decode(""), InvalidInput);

  std::string zero_layers = good;
  zero_layers[5] = zero_layers[6] = zero_layers[7] = zero_layers[8] = 0;
  EXPECT_THROW(decode(zero_layers), InvalidInput);

  // Second layer claiming 33 inputs no longer chains with the first.
  std::string unchained = good;
  const std::size_t second = 17 + 8 * (96 + 32);
  unchained[second + 4] = 33;
  EXPECT_THROW(decode(unchained), InvalidInput);

  std::string nan_weight = good;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan_weight.data() + 17, &nan, sizeof nan);
  EXPECT_THROW(decode(nan_weight), InvalidInput);
}

TEST(CheckpointTest, RejectsMismatchedMixture) {
  Checkpoint c = random_checkpoint(2, 3);
  std::mt19937_64 rng(0);
  c.mixture = testing::random_mixture(rng, 2, 3);
  std::ostringstream out;
  EXPECT_THROW(write_checkpoint(out, c), InvalidInput);
}

TEST(CheckpointTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "dcgn_checkpoint_test.bin";
  const Checkpoint c = random_checkpoint(9, 2);
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.network, c.network);
  EXPECT_EQ(back.mixture.means, c.mixture.means);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), InvalidInput);
}

}  // namespace
}  // namespace dcgn
