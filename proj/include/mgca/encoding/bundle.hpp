#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"
#include "mgca/clues/clue_set.hpp"
#include "mgca/data/ingest.hpp"
#include "mgca/encoding/adapters.hpp"

namespace mgca {

/// Every encoded input of one post. Absent clues are exact zero vectors with
/// their validity flag cleared.
struct FeatureBundle {
  std::string id;
  std::array<Eigen::VectorXd, kNumVectorFeatures> vectors;
  double T_g = 0.0;
  std::array<bool, kNumVectorFeatures> valid{};
  bool T_g_valid = false;

  const Eigen::VectorXd& operator[](Feature f) const { return vectors[static_cast<std::size_t>(f)]; }
  Eigen::VectorXd& operator[](Feature f) { return vectors[static_cast<std::size_t>(f)]; }
  bool is_valid(Feature f) const { return valid[static_cast<std::size_t>(f)]; }

  bool operator==(const FeatureBundle& o) const {
    if (id != o.id || T_g != o.T_g || valid != o.valid || T_g_valid != o.T_g_valid) return false;
    for (int i = 0; i < kNumVectorFeatures; ++i)
      if (vectors[i].size() != o.vectors[i].size() || vectors[i] != o.vectors[i]) return false;
    return true;
  }
};

inline FeatureDims dims_of(const EncoderRegistry& r) {
  r.require_complete();
  return {r.joint->dim(), r.semantic->dim(), r.manipulation->dim()};
}

inline std::string adapters_key(const EncoderRegistry& r) {
  r.require_complete();
  return r.joint->name() + "," + r.semantic->name() + "," + r.manipulation->name();
}

/// Encodes one post. `asset` is null when the visual could not be decoded;
/// V_c and V_m are then zero and invalid.
inline FeatureBundle build_feature_bundle(const NewsPost& post, const ClueSet& clues, const VisualAsset* asset,
                                          const EncoderRegistry& adapters) {
  adapters.require_complete();
  const FeatureDims dims = dims_of(adapters);
  FeatureBundle b;
  b.id = post.id;
  auto set = [&](Feature f, Eigen::VectorXd v, bool valid) {
    b[f] = valid ? std::move(v) : Eigen::VectorXd::Zero(dims.of(f));
    b.valid[static_cast<std::size_t>(f)] = valid;
  };

  Eigen::VectorXd p_c = adapters.joint->encode_text(post.text);
  detail::check_width(*adapters.joint, p_c);
  set(Feature::P_c, std::move(p_c), true);

  auto semantic = [&](Feature f, const Clue<Eigen::VectorXd>& c) { set(f, c.value, c.valid); };
  semantic(Feature::P_b, encode_semantic(post.text, *adapters.semantic));
  semantic(Feature::C_p, encode_semantic(clues.textual_entities, *adapters.semantic));
  semantic(Feature::C_v, encode_semantic(clues.visual_entities, *adapters.semantic));
  semantic(Feature::C_s, encode_semantic(clues.image_event, *adapters.semantic));
  semantic(Feature::C_r, encode_semantic(clues.retrieved_title.value_or(""), *adapters.semantic));

  if (asset) {
    Image joint_in = normalize_image(*asset, adapters.joint->input_range());
    Eigen::VectorXd v_c = adapters.joint->encode_image(joint_in);
    detail::check_width(*adapters.joint, v_c);
    set(Feature::V_c, std::move(v_c), true);
    Image manip_in = normalize_image(*asset, adapters.manipulation->input_range());
    set(Feature::V_m, extract_manipulation_features(manip_in, *adapters.manipulation), true);
  } else {
    set(Feature::V_c, {}, false);
    set(Feature::V_m, {}, false);
  }

  auto gap = normalize_gap(clues.temporal_gap_days);
  b.T_g = gap.value;
  b.T_g_valid = gap.valid;

  for (int i = 0; i < kNumVectorFeatures; ++i)
    if (!b.vectors[i].allFinite())
      throw Error("encoder produced non-finite values in " + std::string(kFeatureNames[i]) + " for post " + post.id);
  if (!std::isfinite(b.T_g)) throw Error("encoder produced non-finite values in T_g for post " + post.id);
  return b;
}

/// Feature cache: `features.bin` (records keyed by post id) plus a JSON
/// manifest recording widths and adapter names.
class FeatureStore {
 public:
  FeatureStore(FeatureDims dims, std::string adapters) : dims_(dims), adapters_(std::move(adapters)) {}
  FeatureStore(FeatureStore&& o) noexcept
      : dims_(o.dims_), adapters_(std::move(o.adapters_)), bundles_(std::move(o.bundles_)) {}

  const FeatureDims& dims() const { return dims_; }
  const std::string& adapters() const { return adapters_; }

  std::optional<FeatureBundle> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = bundles_.find(id);
    if (it == bundles_.end()) return std::nullopt;
    return it->second;
  }

  void insert(FeatureBundle b) {
    std::unique_lock lock(mutex_);
    bundles_[b.id] = std::move(b);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return bundles_.size();
  }

  nlohmann::json manifest() const {
    auto names = split_names(adapters_);
    return {{"d_joint", dims_.joint},
            {"d_sem", dims_.semantic},
            {"d_manip", dims_.manipulation},
            {"adapters", {{"joint", names[0]}, {"semantic", names[1]}, {"manipulation", names[2]}}},
            {"count", size()}};
  }

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::shared_lock lock(mutex_);
    auto tmp = dir / "features.bin.tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error("cannot write feature cache in " + dir.string());
      out.write(kMagic, 8);
      write_u32(out, static_cast<std::uint32_t>(bundles_.size()));
      for (const auto& [id, b] : bundles_) {
        write_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        std::uint32_t flags = 0;
        for (int i = 0; i < kNumVectorFeatures; ++i)
          if (b.valid[i]) flags |= 1u << i;
        if (b.T_g_valid) flags |= 1u << kNumVectorFeatures;
        write_u32(out, flags);
        out.write(reinterpret_cast<const char*>(&b.T_g), sizeof(double));
        for (const auto& v : b.vectors)
          out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
      }
    }
    std::filesystem::rename(tmp, dir / "features.bin");
    lock.unlock();
    std::ofstream(dir / "manifest.json") << manifest().dump(2) << '\n';
  }

  static FeatureStore load(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw Error("feature cache manifest missing in " + dir.string());
    auto m = nlohmann::json::parse(mf);
    FeatureDims dims{m.at("d_joint").get<int>(), m.at("d_sem").get<int>(), m.at("d_manip").get<int>()};
    const auto& a = m.at("adapters");
    FeatureStore store(dims, a.at("joint").get<std::string>() + "," + a.at("semantic").get<std::string>() + "," +
                                 a.at("manipulation").get<std::string>());

    std::ifstream in(dir / "features.bin", std::ios::binary);
    if (!in) throw Error("feature cache data missing in " + dir.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("not a feature cache: " + dir.string());
    const std::uint32_t count = read_u32(in);
    for (std::uint32_t r = 0; r < count; ++r) {
      FeatureBundle b;
      b.id.resize(read_u32(in));
      in.read(b.id.data(), static_cast<std::streamsize>(b.id.size()));
      const std::uint32_t flags = read_u32(in);
      for (int i = 0; i < kNumVectorFeatures; ++i) b.valid[i] = (flags >> i) & 1u;
      b.T_g_valid = (flags >> kNumVectorFeatures) & 1u;
      in.read(reinterpret_cast<char*>(&b.T_g), sizeof(double));
      for (int i = 0; i < kNumVectorFeatures; ++i) {
        b.vectors[i].resize(dims.of(static_cast<Feature>(i)));
        in.read(reinterpret_cast<char*>(b.vectors[i].data()),
                static_cast<std::streamsize>(b.vectors[i].size() * sizeof(double)));
      }
      if (!in) throw Error("truncated feature cache in " + dir.string());
      store.bundles_.emplace(b.id, std::move(b));
    }
    return store;
  }

 private:
  static constexpr char kMagic[9] = "MGCAFEAT";

  static std::array<std::string, 3> split_names(const std::string& s) {
    std::array<std::string, 3> out;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      auto comma = s.find(',', start);
      out[i] = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      start = comma == std::string::npos ? s.size() : comma + 1;
    }
    return out;
  }
  static void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
  static std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  }

  FeatureDims dims_;
  std::string adapters_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, FeatureBundle> bundles_;
};

/// Memoizing front end over build_feature_bundle.
class FeatureBuilder {
 public:
  FeatureBuilder(EncoderRegistry adapters, std::filesystem::path base_dir, std::shared_ptr<FeatureStore> store = nullptr)
      : adapters_(std::move(adapters)), base_dir_(std::move(base_dir)) {
    if (store && (store->dims() != dims_of(adapters_) || store->adapters() != adapters_key(adapters_)))
      store.reset();  // produced by different adapters; start cold
    store_ = store ? std::move(store) : std::make_shared<FeatureStore>(dims_of(adapters_), adapters_key(adapters_));
  }

  FeatureBundle build(const NewsPost& post, const ClueSet& clues) {
    if (auto hit = store_->find(post.id)) return *hit;
    std::optional<VisualAsset> asset;
    try {
      asset = load_visual(resolve_visual(base_dir_, post.visual_ref));
    } catch (const Error&) {
    }
    ++adapter_calls_;
    FeatureBundle b = build_feature_bundle(post, clues, asset ? &*asset : nullptr, adapters_);
    store_->insert(b);
    return b;
  }

  std::size_t adapter_calls() const { return adapter_calls_; }
  FeatureStore& store() { return *store_; }
  std::shared_ptr<FeatureStore> shared_store() const { return store_; }
  const EncoderRegistry& adapters() const { return adapters_; }

 private:
  EncoderRegistry adapters_;
  std::filesystem::path base_dir_;
  std::shared_ptr<FeatureStore> store_;
  std::atomic<std::size_t> adapter_calls_{0};
};

}  // namespace mgca
