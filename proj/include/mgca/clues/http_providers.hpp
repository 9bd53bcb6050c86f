#pragma once

#include <memory>
#include <string>

// Eigen must precede httplib: <resolv.h> defines a macro named _res.
#include <Eigen/Core>

#include "httplib.h"
#include "json.hpp"
#include "mgca/clues/providers.hpp"

namespace mgca {

/// Default captioning prompt sent to a live image-event service.
inline constexpr const char* kImageEventPrompt = "describe the event of the image breifly";

/// Where a live clue service listens. Requests are JSON POSTs to
/// `<base_path>/clues/<kind>`.
struct HttpEndpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string base_path;
  int timeout_seconds = 30;

  /// Parses "http://host:port/base".
  static HttpEndpoint parse(const std::string& url) {
    HttpEndpoint e;
    std::string rest = url;
    if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
    auto slash = rest.find('/');
    std::string hostport = rest.substr(0, slash);
    if (slash != std::string::npos) e.base_path = rest.substr(slash);
    if (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
    auto colon = hostport.find(':');
    e.host = hostport.substr(0, colon);
    if (colon != std::string::npos) e.port = std::stoi(hostport.substr(colon + 1));
    if (e.host.empty()) throw Error("invalid endpoint url \"" + url + "\"");
    return e;
  }
};

namespace detail {

inline nlohmann::json post_json(const HttpEndpoint& ep, const std::string& path, const nlohmann::json& body) {
  httplib::Client cli(ep.host, ep.port);
  cli.set_connection_timeout(ep.timeout_seconds);
  cli.set_read_timeout(ep.timeout_seconds);
  auto res = cli.Post((ep.base_path + path).c_str(), body.dump(), "application/json");
  if (!res) throw Error("request to " + ep.host + ":" + std::to_string(ep.port) + path + " failed");
  if (res->status != 200) throw Error(path + " returned HTTP " + std::to_string(res->status));
  return nlohmann::json::parse(res->body);
}

inline nlohmann::json image_body(const Image& image) {
  return {{"image_path", image.source}, {"image_hash", image.hash_hex()}};
}

}  // namespace detail

class HttpTextualEntityProvider final : public TextualEntityProvider {
 public:
  explicit HttpTextualEntityProvider(HttpEndpoint ep) : ep_(std::move(ep)) {}
  std::string name() const override { return "http-textual-entity@" + ep_.host + ":" + std::to_string(ep_.port); }
  bool deterministic() const override { return false; }
  std::vector<std::string> entities(std::string_view text) const override {
    auto j = detail::post_json(ep_, "/clues/textual_entity", {{"text", std::string(text)}});
    return j.at("entities").get<std::vector<std::string>>();
  }

 private:
  HttpEndpoint ep_;
};

class HttpVisualEntityProvider final : public VisualEntityProvider {
 public:
  explicit HttpVisualEntityProvider(HttpEndpoint ep) : ep_(std::move(ep)) {}
  std::string name() const override { return "http-visual-entity@" + ep_.host + ":" + std::to_string(ep_.port); }
  bool deterministic() const override { return false; }
  std::vector<VisualEntity> entities(const Image& image) const override {
    auto j = detail::post_json(ep_, "/clues/visual_entity", detail::image_body(image));
    std::vector<VisualEntity> out;
    for (const auto& e : j.at("entities"))
      out.push_back({e.at("name").get<std::string>(), parse_visual_category(e.value("category", std::string()))});
    return out;
  }

 private:
  HttpEndpoint ep_;
};

class HttpImageEventProvider final : public ImageEventProvider {
 public:
  explicit HttpImageEventProvider(HttpEndpoint ep, std::string prompt = kImageEventPrompt)
      : ep_(std::move(ep)), prompt_(std::move(prompt)) {}
  std::string name() const override { return "http-image-event@" + ep_.host + ":" + std::to_string(ep_.port); }
  bool deterministic() const override { return false; }
  std::string describe(const Image& image) const override {
    auto body = detail::image_body(image);
    body["prompt"] = prompt_;
    return detail::post_json(ep_, "/clues/image_event", body).at("description").get<std::string>();
  }

 private:
  HttpEndpoint ep_;
  std::string prompt_;
};

class HttpReverseSearchProvider final : public ReverseSearchProvider {
 public:
  explicit HttpReverseSearchProvider(HttpEndpoint ep) : ep_(std::move(ep)) {}
  std::string name() const override { return "http-reverse-search@" + ep_.host + ":" + std::to_string(ep_.port); }
  bool deterministic() const override { return false; }
  ReverseSearchHit search(const Image& image) const override {
    auto j = detail::post_json(ep_, "/clues/reverse_search", detail::image_body(image));
    ReverseSearchHit hit;
    if (auto t = j.find("earliest_time"); t != j.end() && !t->is_null())
      hit.earliest_time = Date::require_iso(t->get<std::string>());
    if (auto t = j.find("title"); t != j.end() && !t->is_null()) hit.title = t->get<std::string>();
    return hit;
  }

 private:
  HttpEndpoint ep_;
};

inline ProviderRegistry make_http_providers(const HttpEndpoint& ep) {
  ProviderRegistry r;
  r.textual_entity = std::make_shared<HttpTextualEntityProvider>(ep);
  r.visual_entity = std::make_shared<HttpVisualEntityProvider>(ep);
  r.image_event = std::make_shared<HttpImageEventProvider>(ep);
  r.reverse_search = std::make_shared<HttpReverseSearchProvider>(ep);
  return r;
}

}  // namespace mgca
