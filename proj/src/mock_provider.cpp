#include "elembed/mock_provider.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "elembed/errors.hpp"

namespace elembed {

std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MockProvider::MockProvider(std::string model_id, std::size_t dim)
    : model_id_(std::move(model_id)), dim_(dim) {
  if (dim_ == 0) throw Error(Errc::EmptyModelOutput, "mock provider dim must be positive");
}

EmbeddingVector MockProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  calls_.fetch_add(1);

  const std::uint64_t seed = key_hash(ProviderKey{model_id_, request});
  auto uniform = [seed](std::uint64_t k) {
    return static_cast<double>((splitmix64_at(seed, k) >> 11) + 1) * 0x1.0p-53;
  };

  std::vector<double> values(dim_);
  for (std::size_t i = 0; i < dim_; i += 2) {
    const double u1 = uniform(i);
    const double u2 = uniform(i + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    values[i] = r * std::cos(theta);
    if (i + 1 < dim_) values[i + 1] = r * std::sin(theta);
  }

  double sq = 0.0;
  for (double v : values) sq += v * v;
  const double norm = std::sqrt(sq);
  for (double& v : values) v /= norm;
  return EmbeddingVector(std::move(values));
}

}  // namespace elembed
