#include "forge/order_encode.hpp"

#include <algorithm>
#include <deque>
#include <memory>

#include "forge/errors.hpp"

namespace forge {

LinearOrderSpec finite_order(std::vector<ElementId> enumeration, std::function<bool(ElementId, ElementId)> less) {
  LinearOrderSpec r;
  r.enumerate = [enumeration = std::move(enumeration)](std::size_t stage) -> std::optional<ElementId> {
    if (stage == 0 || stage > enumeration.size()) return std::nullopt;
    return enumeration[stage - 1];
  };
  r.less = std::move(less);
  return r;
}

std::optional<BitString> LabeledTree::label(ElementId a) const {
  const auto it = by_element_.find(a);
  if (it == by_element_.end()) return std::nullopt;
  return it->second;
}

std::optional<ElementId> LabeledTree::element_with_label(const BitString& s) const {
  const auto it = by_label_.find(s);
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string id(ElementId a) { return std::to_string(a); }

void check_new_element(const LinearOrderSpec& r, ElementId a, const std::vector<std::pair<ElementId, BitString>>& labels,
                       const std::map<ElementId, BitString>& by_element) {
  if (by_element.count(a) != 0) throw MalformedOrder("element " + id(a) + " enumerated twice");
  if (r.less(a, a)) throw MalformedOrder("element " + id(a) + " is below itself");
  for (const auto& [b, _] : labels) {
    const bool ab = r.less(a, b);
    const bool ba = r.less(b, a);
    if (ab == ba) {
      throw MalformedOrder("elements " + id(a) + " and " + id(b) + (ab ? " are each below the other" : " are incomparable"));
    }
  }
  for (const auto& [b, _] : labels) {
    for (const auto& [c, __] : labels) {
      if (b == c) continue;
      const bool bc = r.less(b, c);
      const bool violated = (r.less(b, a) && r.less(a, c) && !bc) || (r.less(a, b) && bc && !r.less(a, c)) ||
                            (bc && r.less(c, a) && !r.less(b, a));
      if (violated) throw MalformedOrder("transitivity fails on " + id(a) + ", " + id(b) + ", " + id(c));
    }
  }
}

}  // namespace

LabeledTree build_order_tree(const LinearOrderSpec& r, std::size_t depth, std::string spec) {
  LabeledTree lt;
  lt.levels_.push_back({BitString{}});
  std::deque<ElementId> queue;
  if (auto a = r.enumerate(0)) queue.push_back(*a);

  for (std::size_t n = 0; n < depth; ++n) {
    // Stage n + 1 decides level n + 1.
    if (auto a = r.enumerate(n + 1)) queue.push_back(*a);
    std::vector<BitString> next;
    for (const auto& t : lt.levels_[n]) next.push_back(t.with(true));
    if (!queue.empty()) {
      const ElementId a = queue.front();
      queue.pop_front();
      check_new_element(r, a, lt.labels_, lt.by_element_);
      std::optional<std::pair<ElementId, BitString>> least_above;
      for (const auto& [b, lb] : lt.labels_) {
        if (r.less(a, b) && (!least_above || r.less(b, least_above->first))) least_above = std::make_pair(b, lb);
      }
      BitString l;
      if (!least_above) {
        l = BitString::repeat(true, n).with(false);
      } else {
        l = least_above->second + BitString::repeat(true, n - least_above->second.size());
        l.push_back(false);
      }
      lt.labels_.emplace_back(a, l);
      lt.by_element_.emplace(a, l);
      lt.by_label_.emplace(l, a);
      next.push_back(std::move(l));
    }
    std::sort(next.begin(), next.end());
    lt.levels_.push_back(std::move(next));
  }
  lt.built_depth_ = depth;

  auto members = std::make_shared<std::set<BitString>>();
  for (const auto& level : lt.levels_) members->insert(level.begin(), level.end());
  auto member = [members, depth](const BitString& s) {
    if (s.size() <= depth) return members->count(s) != 0;
    for (std::size_t i = depth; i < s.size(); ++i) {
      if (!s[i]) return false;
    }
    return members->count(s.prefix(depth)) != 0;
  };
  lt.tree_ = Tree(std::move(member), std::move(spec), depth);
  return lt;
}

std::vector<std::pair<ElementId, BitString>> successor_labeled_paths(const LabeledTree& lt, std::size_t depth) {
  std::vector<std::pair<ElementId, BitString>> out;
  for (const auto& entry : lt.labels()) {
    if (entry.second.size() <= depth) out.push_back(entry);
  }
  return out;
}

std::vector<ElementId> recover_order(const LabeledTree& lt, std::size_t depth) {
  std::vector<std::pair<ElementId, Path>> items;
  for (const auto& [a, l] : successor_labeled_paths(lt, depth)) items.emplace_back(a, Path::eventually(l, true));
  std::sort(items.begin(), items.end(), [&](const auto& x, const auto& y) {
    return path_compare(x.second, y.second, lt.built_depth() + 2) == PathOrder::Less;
  });
  std::vector<ElementId> out;
  for (const auto& item : items) out.push_back(item.first);
  return out;
}

}  // namespace forge
