#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mgca/clues/providers.hpp"
#include "mgca/data/visual.hpp"

namespace mgca {

enum class EncoderFamily { joint, semantic, manipulation };

inline std::string_view to_string(EncoderFamily f) {
  switch (f) {
    case EncoderFamily::joint: return "joint";
    case EncoderFamily::semantic: return "semantic";
    default: return "manipulation";
  }
}

/// Indices of the vector features, in storage order.
enum class Feature : int { P_c = 0, V_c, P_b, C_p, C_v, C_s, C_r, V_m };
inline constexpr int kNumVectorFeatures = 8;
inline constexpr std::array<std::string_view, kNumVectorFeatures> kFeatureNames{"P_c", "V_c", "P_b", "C_p",
                                                                                "C_v", "C_s", "C_r", "V_m"};

struct FeatureDims {
  int joint = 512;
  int semantic = 768;
  int manipulation = 256;

  int of(Feature f) const {
    switch (f) {
      case Feature::P_c:
      case Feature::V_c: return joint;
      case Feature::V_m: return manipulation;
      default: return semantic;
    }
  }
  bool operator==(const FeatureDims&) const = default;
};

/// A frozen pretrained encoder behind a fixed-width output.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;
  virtual std::string name() const = 0;
  virtual EncoderFamily family() const = 0;
  virtual int dim() const = 0;
  bool frozen() const { return true; }
  /// Digest of everything that determines the adapter's outputs.
  virtual std::uint64_t checksum() const = 0;
};

/// Text and image into one shared space of width dim().
class JointEncoder : public EncoderAdapter {
 public:
  EncoderFamily family() const final { return EncoderFamily::joint; }
  virtual InputRange input_range() const { return {}; }
  virtual Eigen::VectorXd encode_text(std::string_view text) const = 0;
  virtual Eigen::VectorXd encode_image(const Image& image) const = 0;
};

class SemanticEncoder : public EncoderAdapter {
 public:
  EncoderFamily family() const final { return EncoderFamily::semantic; }
  virtual Eigen::VectorXd encode_text(std::string_view text) const = 0;
};

class ManipulationEncoder : public EncoderAdapter {
 public:
  EncoderFamily family() const final { return EncoderFamily::manipulation; }
  virtual InputRange input_range() const { return {}; }
  virtual Eigen::VectorXd features(const Image& image) const = 0;
};

struct EncoderRegistry {
  std::shared_ptr<const JointEncoder> joint;
  std::shared_ptr<const SemanticEncoder> semantic;
  std::shared_ptr<const ManipulationEncoder> manipulation;

  void require_complete() const {
    if (!joint || !semantic || !manipulation) throw Error("encoder registry must hold one adapter per family");
  }
};

inline constexpr std::string_view kEntitySeparator = " ; ";

inline std::string join_entities(const std::vector<std::string>& entities) {
  std::string out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (i) out += kEntitySeparator;
    out += entities[i];
  }
  return out;
}

namespace detail {

inline void check_width(const EncoderAdapter& a, const Eigen::VectorXd& v) {
  if (v.size() != a.dim())
    throw ShapeError(shape_message("adapter " + a.name() + " output width", a.dim(), static_cast<long>(v.size())));
}

}  // namespace detail

struct JointEmbedding {
  Eigen::VectorXd text;   // P_c
  Eigen::VectorXd image;  // V_c
};

inline JointEmbedding encode_joint(std::string_view text, const Image& image, const JointEncoder& adapter) {
  JointEmbedding e{adapter.encode_text(text), adapter.encode_image(image)};
  detail::check_width(adapter, e.text);
  detail::check_width(adapter, e.image);
  return e;
}

/// Empty input encodes to the zero vector and is marked invalid.
inline Clue<Eigen::VectorXd> encode_semantic(std::string_view text, const SemanticEncoder& adapter) {
  if (text.empty()) return {Eigen::VectorXd::Zero(adapter.dim()), false};
  Eigen::VectorXd v = adapter.encode_text(text);
  detail::check_width(adapter, v);
  return {std::move(v), true};
}

/// Entity lists are serialized as one " ; "-joined string.
inline Clue<Eigen::VectorXd> encode_semantic(const std::vector<std::string>& entities,
                                             const SemanticEncoder& adapter) {
  return encode_semantic(join_entities(entities), adapter);
}

inline Eigen::VectorXd extract_manipulation_features(const Image& image, const ManipulationEncoder& adapter) {
  Eigen::VectorXd v = adapter.features(image);
  detail::check_width(adapter, v);
  return v;
}

inline constexpr double kDaysPerYear = 365.25;

/// Temporal gap in years; absent gaps map to 0 and are marked invalid.
inline Clue<double> normalize_gap(std::optional<long> gap_days) {
  if (!gap_days) return {0.0, false};
  return {static_cast<double>(*gap_days) / kDaysPerYear, true};
}

}  // namespace mgca
