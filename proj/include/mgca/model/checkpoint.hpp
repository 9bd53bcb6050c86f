#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/model/mgca_model.hpp"

namespace mgca {

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dims = {j.at("d_joint").get<int>(), j.at("d_sem").get<int>(), j.at("d_manip").get<int>()};
  c.d_out = j.at("d_out").get<int>();
  c.d_t = j.at("d_t").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.rep = j.at("rep").get<int>();
  c.share_compare = j.at("share_compare").get<bool>();
  c.stop_gradient_gates = j.value("stop_gradient_gates", false);
  return c;
}

struct CheckpointManifest {
  std::string config_hash;
  ModelConfig config;
  Task task = Task::detect;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string dtype;
  BranchMask mask;  // branches disabled while training

  nlohmann::json to_json() const {
    auto dims = config.to_json();
    dims["stop_gradient_gates"] = config.stop_gradient_gates;
    return {{"config_hash", config_hash}, {"dims", dims},   {"task", std::string(to_string(task))},
            {"seed", seed},               {"epoch", epoch}, {"dtype", dtype},
            {"branch_mask", mask.to_string()}};
  }

  static CheckpointManifest from_json(const nlohmann::json& j) {
    CheckpointManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = model_config_from_json(j.at("dims"));
    m.task = parse_task(j.at("task").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epoch = j.at("epoch").get<int>();
    m.dtype = j.value("dtype", "float32");
    m.mask = BranchMask::parse(j.value("branch_mask", std::string()));
    return m;
  }
};

/// What `load_checkpoint` restored.
struct LoadReport {
  CheckpointManifest manifest;
  std::vector<std::string> missing;  // model tensors left at their initial values
  std::vector<std::string> unused;   // stored tensors the model has no slot for
  std::vector<std::string> warnings;
};

namespace detail {

inline constexpr char kCheckpointMagic[9] = "MGCACKPT";

template <typename S>
std::map<std::string, const nn::Matrix<S>*> named_tensors(MgcaModel<S>& model) {
  std::map<std::string, const nn::Matrix<S>*> out;
  for (auto* p : model.parameters()) out.emplace(p->name, &p->value);
  for (auto* b : model.buffers()) out.emplace(b->name, &b->value);
  return out;
}

template <typename S>
std::map<std::string, nn::Matrix<S>*> mutable_tensors(MgcaModel<S>& model) {
  std::map<std::string, nn::Matrix<S>*> out;
  for (auto* p : model.parameters()) out.emplace(p->name, &p->value);
  for (auto* b : model.buffers()) out.emplace(b->name, &b->value);
  return out;
}

inline void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace detail

inline CheckpointManifest read_checkpoint_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("checkpoint manifest missing in " + dir.string());
  return CheckpointManifest::from_json(nlohmann::json::parse(in));
}

/// Writes `params.bin` and `manifest.json` into `dir`. Values are stored as
/// doubles, which round-trips float32 parameters exactly.
template <typename S>
void save_checkpoint(MgcaModel<S>& model, const std::filesystem::path& dir, int epoch, const BranchMask& mask = {}) {
  std::filesystem::create_directories(dir);
  const auto tmp = dir / "params.bin.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + dir.string());
    out.write(detail::kCheckpointMagic, 8);
    const auto tensors = detail::named_tensors(model);
    detail::put_u64(out, tensors.size());
    for (const auto& [name, m] : tensors) {
      detail::put_u64(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::put_u64(out, static_cast<std::uint64_t>(m->rows()));
      detail::put_u64(out, static_cast<std::uint64_t>(m->cols()));
      const Eigen::MatrixXd d = m->template cast<double>();
      out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw Error("cannot write checkpoint " + dir.string());
  }
  std::filesystem::rename(tmp, dir / "params.bin");

  CheckpointManifest m;
  m.config_hash = model.config().hash();
  m.config = model.config();
  m.task = model.task();
  m.seed = model.seed();
  m.epoch = epoch;
  m.dtype = sizeof(S) == 4 ? "float32" : "float64";
  m.mask = mask;
  std::ofstream mf(dir / "manifest.json");
  mf << m.to_json().dump(2) << '\n';
}

/// Restores every stored tensor whose name and shape match the model.
///
/// The configuration hash must match. A checkpoint of the other task
/// restores the shared backbone and leaves the task head at its
/// initialization, with a warning.
template <typename S>
LoadReport load_checkpoint(MgcaModel<S>& model, const std::filesystem::path& dir) {
  LoadReport r;
  r.manifest = read_checkpoint_manifest(dir);
  if (r.manifest.config_hash != model.config().hash())
    throw Error("checkpoint incompatible with configuration: " + dir.string() + " has config hash " +
                r.manifest.config_hash + ", model has " + model.config().hash());

  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw Error("checkpoint parameters missing in " + dir.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0) throw Error("not a checkpoint: " + dir.string());

  auto slots = detail::mutable_tensors(model);
  std::map<std::string, bool> restored;
  const auto count = detail::get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(detail::get_u64(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = static_cast<Eigen::Index>(detail::get_u64(in));
    const auto cols = static_cast<Eigen::Index>(detail::get_u64(in));
    if (!in || rows < 0 || cols < 0 || rows * cols > (Eigen::Index{1} << 32))
      throw Error("corrupt checkpoint " + dir.string());
    Eigen::MatrixXd d(rows, cols);
    in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!in) throw Error("truncated checkpoint " + dir.string());
    auto it = slots.find(name);
    if (it == slots.end()) {
      r.unused.push_back(name);
      continue;
    }
    if (it->second->rows() != rows || it->second->cols() != cols)
      throw Error("checkpoint incompatible with configuration: tensor " + name + " has shape " +
                  std::to_string(rows) + "x" + std::to_string(cols));
    *it->second = d.cast<S>();
    restored[name] = true;
  }
  for (const auto& [name, _] : slots)
    if (!restored.count(name)) r.missing.push_back(name);

  if (r.manifest.task != model.task())
    r.warnings.push_back("checkpoint was trained for " + std::string(to_string(r.manifest.task)) +
                         "; restored the shared backbone, " + MgcaModel<S>::head_name(model.task()) +
                         " starts from initialization");
  else if (!r.missing.empty())
    r.warnings.push_back(std::to_string(r.missing.size()) + " model tensors were not in the checkpoint");
  return r;
}

}  // namespace mgca
