#pragma once

// Staged encoding of an enumerated linear order R into a tree T_R with a
// labelling l_R such that
//   (1) a member ends in 0 exactly when it is some label,
//   (2) l_R(a) 1^omega is a path of T_R,
//   (3) a <_R b iff l_R(a) 1^omega is left of l_R(b) 1^omega.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forge/cantor_tree.hpp"

namespace forge {

using ElementId = std::uint64_t;

struct LinearOrderSpec {
  /// Element enumerated at a stage, if any. Stage 0 elements wait in the
  /// queue for stage 1 like any other backlog.
  std::function<std::optional<ElementId>(std::size_t)> enumerate;
  std::function<bool(ElementId, ElementId)> less;
};

/// A finite order listed in enumeration order, one element per stage
/// starting at stage 1, compared by `less`.
LinearOrderSpec finite_order(std::vector<ElementId> enumeration, std::function<bool(ElementId, ElementId)> less);

class LabeledTree {
 public:
  /// The finite-stage tree: strings longer than built_depth are members
  /// exactly when they extend a level-built_depth member by 1s, so
  /// built_depth is also a horizon.
  const Tree& tree() const noexcept { return tree_; }
  std::size_t built_depth() const noexcept { return built_depth_; }

  /// Labels in the order they were assigned.
  const std::vector<std::pair<ElementId, BitString>>& labels() const noexcept { return labels_; }
  std::optional<BitString> label(ElementId a) const;
  std::optional<ElementId> element_with_label(const BitString& s) const;

  /// Members of length n, n <= built_depth, in lexicographic order.
  const std::vector<BitString>& level(std::size_t n) const { return levels_.at(n); }

 private:
  friend LabeledTree build_order_tree(const LinearOrderSpec&, std::size_t, std::string);

  Tree tree_ = full_tree();
  std::size_t built_depth_ = 0;
  std::vector<std::pair<ElementId, BitString>> labels_;
  std::map<ElementId, BitString> by_element_;
  std::map<BitString, ElementId> by_label_;
  std::vector<std::vector<BitString>> levels_;
};

/// Runs stages 0..depth. Throws forge::MalformedOrder when an element repeats
/// or `less` fails irreflexivity, totality, asymmetry or transitivity on a
/// triple involving the newest element.
LabeledTree build_order_tree(const LinearOrderSpec& r, std::size_t depth, std::string spec = "ORDER");

/// (a, l_R(a)) for every label of length <= depth, in stage order. These
/// label exactly the paths l_R(a) 1^omega, the paths with a successor.
std::vector<std::pair<ElementId, BitString>> successor_labeled_paths(const LabeledTree& lt, std::size_t depth);

/// Elements labelled by stage `depth`, sorted by their paths l_R(a) 1^omega.
std::vector<ElementId> recover_order(const LabeledTree& lt, std::size_t depth);

}  // namespace forge
