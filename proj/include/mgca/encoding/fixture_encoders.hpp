#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "mgca/clues/fixture_providers.hpp"
#include "mgca/common/hash.hpp"
#include "mgca/encoding/adapters.hpp"

namespace mgca {

inline constexpr std::uint64_t kDefaultFixtureSeed = 0x4d474341;  // "MGCA"

/// Deterministic unit-norm embedding of `payload`.
///
/// state = FNV-1a64(domain + '\x1f' + payload) XOR seed; component i is
/// 2*u_i - 1 where u_i is the top 53 bits of the i-th SplitMix64 draw from
/// state, scaled to [0,1). The vector is then divided by its L2 norm.
inline Eigen::VectorXd hash_to_vector(std::string_view domain, std::string_view payload, int dim,
                                      std::uint64_t seed) {
  std::uint64_t state = fnv1a64(payload, fnv1a64("\x1f", fnv1a64(domain))) ^ seed;
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = 2.0 * unit_double(splitmix64(state)) - 1.0;
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

namespace detail {

inline std::uint64_t adapter_digest(const std::string& name, int dim, std::uint64_t seed, std::uint64_t extra = 0) {
  std::uint64_t h = fnv1a64(name);
  h = fnv1a64(std::to_string(dim), h);
  h = fnv1a64(std::to_string(seed), h);
  return fnv1a64(std::to_string(extra), h);
}

}  // namespace detail

/// Text: hash_to_vector("joint/text", text); image: hash_to_vector("joint/image", hex content hash).
class FixtureJointEncoder final : public JointEncoder {
 public:
  explicit FixtureJointEncoder(int dim = 512, std::uint64_t seed = kDefaultFixtureSeed) : dim_(dim), seed_(seed) {}
  std::string name() const override { return "fixture-joint"; }
  int dim() const override { return dim_; }
  std::uint64_t checksum() const override { return detail::adapter_digest(name(), dim_, seed_); }
  Eigen::VectorXd encode_text(std::string_view text) const override {
    return hash_to_vector("joint/text", text, dim_, seed_);
  }
  Eigen::VectorXd encode_image(const Image& image) const override {
    return hash_to_vector("joint/image", image.hash_hex(), dim_, seed_);
  }

 private:
  int dim_;
  std::uint64_t seed_;
};

/// hash_to_vector("semantic", text).
class FixtureSemanticEncoder final : public SemanticEncoder {
 public:
  explicit FixtureSemanticEncoder(int dim = 768, std::uint64_t seed = kDefaultFixtureSeed) : dim_(dim), seed_(seed) {}
  std::string name() const override { return "fixture-semantic"; }
  int dim() const override { return dim_; }
  std::uint64_t checksum() const override { return detail::adapter_digest(name(), dim_, seed_); }
  Eigen::VectorXd encode_text(std::string_view text) const override {
    return hash_to_vector("semantic", text, dim_, seed_);
  }

 private:
  int dim_;
  std::uint64_t seed_;
};

/// Images listed in the fixture table map to hash_to_vector("manipulation",
/// <manipulation tag>), so every image sharing a tag shares a vector; unlisted
/// images map to hash_to_vector("manipulation/image", hex content hash).
class FixtureManipulationEncoder final : public ManipulationEncoder {
 public:
  explicit FixtureManipulationEncoder(std::shared_ptr<const FixtureClueTable> table, int dim = 256,
                                      std::uint64_t seed = kDefaultFixtureSeed)
      : table_(std::move(table)), dim_(dim), seed_(seed) {}
  std::string name() const override { return "fixture-manipulation"; }
  int dim() const override { return dim_; }
  std::uint64_t checksum() const override {
    return detail::adapter_digest(name(), dim_, seed_, table_ ? table_->size() : 0);
  }
  Eigen::VectorXd features(const Image& image) const override {
    const auto hex = image.hash_hex();
    if (const auto* rec = table_ ? table_->find(hex) : nullptr)
      return hash_to_vector("manipulation", rec->manipulation, dim_, seed_);
    return hash_to_vector("manipulation/image", hex, dim_, seed_);
  }

 private:
  std::shared_ptr<const FixtureClueTable> table_;
  int dim_;
  std::uint64_t seed_;
};

inline EncoderRegistry make_fixture_encoders(std::shared_ptr<const FixtureClueTable> table, FeatureDims dims = {},
                                             std::uint64_t seed = kDefaultFixtureSeed) {
  EncoderRegistry r;
  r.joint = std::make_shared<FixtureJointEncoder>(dims.joint, seed);
  r.semantic = std::make_shared<FixtureSemanticEncoder>(dims.semantic, seed);
  r.manipulation = std::make_shared<FixtureManipulationEncoder>(std::move(table), dims.manipulation, seed);
  return r;
}

}  // namespace mgca
