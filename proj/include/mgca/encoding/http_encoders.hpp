#pragma once

#include <memory>
#include <string>

#include "mgca/clues/http_providers.hpp"
#include "mgca/encoding/adapters.hpp"

namespace mgca {

// Live adapters for encoders served out of process. Requests are JSON POSTs
// to `<base_path>/encode/<family>/<text|image>`; replies carry {"vector": [...]}.
// The served model must be frozen; the checksum covers endpoint and width only.

namespace detail {

inline Eigen::VectorXd fetch_vector(const HttpEndpoint& ep, const std::string& path, const nlohmann::json& body) {
  auto values = post_json(ep, path, body).at("vector").get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline std::uint64_t endpoint_digest(const HttpEndpoint& ep, const std::string& name, int dim) {
  return fnv1a64(ep.host + ":" + std::to_string(ep.port) + ep.base_path + "/" + name + "/" + std::to_string(dim));
}

}  // namespace detail

class HttpJointEncoder final : public JointEncoder {
 public:
  HttpJointEncoder(HttpEndpoint ep, int dim, InputRange range = {}) : ep_(std::move(ep)), dim_(dim), range_(range) {}
  std::string name() const override { return "http-joint"; }
  int dim() const override { return dim_; }
  InputRange input_range() const override { return range_; }
  std::uint64_t checksum() const override { return detail::endpoint_digest(ep_, name(), dim_); }
  Eigen::VectorXd encode_text(std::string_view text) const override {
    return detail::fetch_vector(ep_, "/encode/joint/text", {{"text", std::string(text)}});
  }
  Eigen::VectorXd encode_image(const Image& image) const override {
    return detail::fetch_vector(ep_, "/encode/joint/image", detail::image_body(image));
  }

 private:
  HttpEndpoint ep_;
  int dim_;
  InputRange range_;
};

class HttpSemanticEncoder final : public SemanticEncoder {
 public:
  HttpSemanticEncoder(HttpEndpoint ep, int dim) : ep_(std::move(ep)), dim_(dim) {}
  std::string name() const override { return "http-semantic"; }
  int dim() const override { return dim_; }
  std::uint64_t checksum() const override { return detail::endpoint_digest(ep_, name(), dim_); }
  Eigen::VectorXd encode_text(std::string_view text) const override {
    return detail::fetch_vector(ep_, "/encode/semantic/text", {{"text", std::string(text)}});
  }

 private:
  HttpEndpoint ep_;
  int dim_;
};

class HttpManipulationEncoder final : public ManipulationEncoder {
 public:
  HttpManipulationEncoder(HttpEndpoint ep, int dim, InputRange range = {})
      : ep_(std::move(ep)), dim_(dim), range_(range) {}
  std::string name() const override { return "http-manipulation"; }
  int dim() const override { return dim_; }
  InputRange input_range() const override { return range_; }
  std::uint64_t checksum() const override { return detail::endpoint_digest(ep_, name(), dim_); }
  Eigen::VectorXd features(const Image& image) const override {
    return detail::fetch_vector(ep_, "/encode/manipulation/image", detail::image_body(image));
  }

 private:
  HttpEndpoint ep_;
  int dim_;
  InputRange range_;
};

/// Widths default to the ViT-B/16 joint space and the base-size text encoder.
inline EncoderRegistry make_http_encoders(const HttpEndpoint& ep, int d_joint = 512, int d_sem = 768,
                                          int d_manip = 256) {
  EncoderRegistry r;
  r.joint = std::make_shared<HttpJointEncoder>(ep, d_joint);
  r.semantic = std::make_shared<HttpSemanticEncoder>(ep, d_sem);
  r.manipulation = std::make_shared<HttpManipulationEncoder>(ep, d_manip);
  return r;
}

}  // namespace mgca
