#pragma once

#include <array>
#include <bitset>
#include <string>
#include <string_view>

#include "mgca/common/error.hpp"

namespace mgca {

/// Evidence branches, each with its own judgment head and fusion gate.
enum class Branch : int { entity = 0, event, temporal, manipulation, visual };
inline constexpr int kNumBranches = 5;
inline constexpr std::array<std::string_view, kNumBranches> kBranchNames{"entity", "event", "temporal",
                                                                         "manipulation", "visual"};
inline constexpr std::array<Branch, kNumBranches> kAllBranches{Branch::entity, Branch::event, Branch::temporal,
                                                               Branch::manipulation, Branch::visual};

inline std::string_view to_string(Branch b) { return kBranchNames[static_cast<std::size_t>(b)]; }

/// Accepts the canonical names plus the ablation-table aliases
/// "PSCC-NET" (manipulation) and "vem" (visual).
inline Branch parse_branch(std::string_view s) {
  if (s == "PSCC-NET" || s == "pscc-net" || s == "pscc") return Branch::manipulation;
  if (s == "vem") return Branch::visual;
  for (int i = 0; i < kNumBranches; ++i)
    if (s == kBranchNames[i]) return static_cast<Branch>(i);
  throw Error("unknown branch \"" + std::string(s) +
              "\"; valid names: entity, event, temporal, manipulation (PSCC-NET), visual (vem)");
}

/// Set of disabled branches.
class BranchMask {
 public:
  BranchMask() = default;

  static BranchMask of(std::initializer_list<Branch> branches) {
    BranchMask m;
    for (Branch b : branches) m.disable(b);
    return m;
  }
  static BranchMask all() {
    BranchMask m;
    m.bits_.set();
    return m;
  }

  /// Comma-separated branch names; empty string is the empty mask.
  static BranchMask parse(std::string_view list) {
    BranchMask m;
    std::size_t start = 0;
    while (start <= list.size()) {
      auto comma = list.find(',', start);
      auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      if (!item.empty()) m.disable(parse_branch(item));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return m;
  }

  void disable(Branch b) { bits_.set(static_cast<std::size_t>(b)); }
  bool masked(Branch b) const { return bits_.test(static_cast<std::size_t>(b)); }
  bool active(Branch b) const { return !masked(b); }
  int active_count() const { return kNumBranches - static_cast<int>(bits_.count()); }
  bool empty() const { return bits_.none(); }

  std::string to_string() const {
    std::string out;
    for (int i = 0; i < kNumBranches; ++i) {
      if (!bits_.test(static_cast<std::size_t>(i))) continue;
      if (!out.empty()) out += ',';
      out += kBranchNames[i];
    }
    return out;
  }

  bool operator==(const BranchMask&) const = default;

 private:
  std::bitset<kNumBranches> bits_;
};

enum class Task { detect, attribute };

inline std::string_view to_string(Task t) { return t == Task::detect ? "detect" : "attribute"; }

inline Task parse_task(std::string_view s) {
  if (s == "detect") return Task::detect;
  if (s == "attribute") return Task::attribute;
  throw Error("unknown task \"" + std::string(s) + "\" (expected detect or attribute)");
}

inline int num_outputs(Task t) { return t == Task::detect ? 1 : 6; }

}  // namespace mgca
