#include "forge/reduction.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "forge/errors.hpp"

namespace forge {

bool CeSample::contains(std::uint64_t n) const {
  return std::find(enumeration.begin(), enumeration.end(), n) != enumeration.end();
}

std::vector<std::uint64_t> CeSample::complement_prefix(std::size_t count) const {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = 0; out.size() < count; ++n) {
    if (!contains(n)) out.push_back(n);
  }
  return out;
}

namespace {

// 1^n 0^omega -> n, 1^omega -> nothing; DomainError for other shapes.
std::optional<std::size_t> leading_ones(const EventualForm& x) {
  if (x.tail) {
    if (!x.prefix.empty()) throw DomainError("path is not of the form 1^n 0^ω or 1^ω");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < x.prefix.size(); ++i) {
    if (!x.prefix[i]) throw DomainError("path is not of the form 1^n 0^ω or 1^ω");
  }
  return x.prefix.size();
}

}  // namespace

OrderIso pq_order_iso(const CeSample& sample) {
  OrderIso iso;
  iso.forward = [sample](const Path& x) {
    if (const auto& ev = x.eventual()) {
      const auto n = leading_ones(*ev);
      if (!n) return Path::constant(true);
      const auto m = sample.complement_prefix(*n + 1).back();
      return Path::eventually(BitString::repeat(true, static_cast<std::size_t>(m)), false);
    }
    // Bit j is 1 iff the n-th complement element exceeds j, i.e. iff x starts
    // with at least (number of complement elements <= j) ones.
    return Path::stream([sample, x](std::size_t j) {
      std::size_t below = 0;
      for (std::uint64_t m = 0; m <= j; ++m) {
        if (!sample.contains(m)) ++below;
      }
      for (std::size_t i = 0; i < below; ++i) {
        if (!x[i]) return false;
      }
      return true;
    });
  };
  iso.backward = [sample](const Path& y) {
    if (const auto& ev = y.eventual()) {
      const auto m = leading_ones(*ev);
      if (!m) return Path::constant(true);
      if (sample.contains(*m)) throw DomainError("1^" + std::to_string(*m) + " 0^ω is not a path of Q");
      std::size_t rank = 0;
      for (std::uint64_t k = 0; k < *m; ++k) {
        if (!sample.contains(k)) ++rank;
      }
      return Path::eventually(BitString::repeat(true, rank), false);
    }
    // Bit j is 1 iff the j-th complement element still lies in y's leading ones.
    return Path::stream([sample, y](std::size_t j) {
      const auto m = sample.complement_prefix(j + 1).back();
      for (std::uint64_t i = 0; i <= m; ++i) {
        if (!y[static_cast<std::size_t>(i)]) return false;
      }
      return true;
    });
  };
  return iso;
}

std::uint64_t extract_complement_element(const OrderIso& hstar, std::size_t n, std::size_t bit_budget) {
  const Path y = hstar.forward(Path::eventually(BitString::repeat(true, n), false));
  for (std::size_t j = 0; j < bit_budget; ++j) {
    if (!y[j]) return j;
  }
  throw BudgetExhausted("no 0 among the first " + std::to_string(bit_budget) + " bits of the image of 1^" +
                        std::to_string(n) + " 0^ω");
}

std::vector<std::uint64_t> recover_ce_complement(const OrderIso& hstar, std::size_t count, std::size_t bit_budget) {
  std::vector<std::uint64_t> out;
  for (std::size_t n = 0; n < count; ++n) out.push_back(extract_complement_element(hstar, n, bit_budget));
  return out;
}

ZeroOracle eventual_zero_oracle() {
  return [](const Path& x, std::size_t k) {
    const auto& ev = x.eventual();
    if (!ev) throw DomainError("zero oracle consulted on a path with unknown tail");
    if (!ev->tail) return true;
    for (std::size_t i = k; i < ev->prefix.size(); ++i) {
      if (!ev->prefix[i]) return true;
    }
    return false;
  };
}

std::map<ElementId, ElementId> jump_extract_order_iso(const Homeo& h, const LabeledTree& r, const LabeledTree& s,
                                                      const ZeroOracle& oracle, JumpOptions options) {
  const OrderIso iso = extract_order_iso(h, r.tree(), s.tree());
  std::map<ElementId, ElementId> out;
  for (const auto& [a, label] : r.labels()) {
    const Path y = iso.forward(Path::eventually(label, true));
    std::optional<std::size_t> last_zero;
    if (oracle(y, 0)) {
      std::size_t j = 0;
      while (true) {
        for (; j < options.bit_budget && y[j]; ++j) {
        }
        if (j >= options.bit_budget) {
          throw BudgetExhausted("promised 0 not found within " + std::to_string(options.bit_budget) + " bits");
        }
        if (!oracle(y, j + 1)) break;
        ++j;
      }
      last_zero = j;
      for (std::size_t i = j + 1; i <= j + options.recheck_bits; ++i) {
        if (!y[i]) {
          throw InconsistentOracle("oracle denied further zeros after bit " + std::to_string(j) + " but bit " +
                                   std::to_string(i) + " is 0");
        }
      }
    }
    if (!last_zero) throw LabelNotFound("image of element " + std::to_string(a) + " contains no 0");
    const BitString prefix = y.prefix(*last_zero + 1);
    const auto b = s.element_with_label(prefix);
    if (!b) {
      throw LabelNotFound("image of element " + std::to_string(a) + " ends in '" + prefix.str() +
                          "' followed by 1s, which labels nothing");
    }
    out.emplace(a, *b);
  }
  return out;
}

std::map<ElementId, ElementId> label_isomorphism(const LabeledTree& r, const LabeledTree& s) {
  const auto lr = recover_order(r, r.built_depth());
  const auto ls = recover_order(s, s.built_depth());
  if (lr.size() != ls.size()) {
    throw std::invalid_argument("orders of different sizes " + std::to_string(lr.size()) + " and " +
                                std::to_string(ls.size()));
  }
  std::map<ElementId, ElementId> out;
  for (std::size_t i = 0; i < lr.size(); ++i) out.emplace(lr[i], ls[i]);
  return out;
}

OrderIso label_order_iso(const LabeledTree& r, const LabeledTree& s) {
  const auto fwd = label_isomorphism(r, s);
  std::map<ElementId, ElementId> bwd;
  for (const auto& [a, b] : fwd) bwd.emplace(b, a);
  auto mapper = [](const LabeledTree& from, const LabeledTree& to, std::map<ElementId, ElementId> m) {
    return [m = std::move(m), from_labels = from.labels(), to_labels = to.labels()](const Path& x) {
      const auto& ev = x.eventual();
      if (!ev) throw DomainError("label isomorphism needs an eventually constant path");
      if (ev->tail && ev->prefix.empty()) return Path::constant(true);
      if (ev->tail) {
        for (const auto& [a, l] : from_labels) {
          if (l != ev->prefix) continue;
          const ElementId b = m.at(a);
          for (const auto& [c, lc] : to_labels) {
            if (c == b) return Path::eventually(lc, true);
          }
        }
      }
      throw DomainError("path " + x.to_string() + " is not a labelled path");
    };
  };
  return OrderIso{mapper(r, s, fwd), mapper(s, r, bwd)};
}

bool DemoReport::all_match() const {
  return std::all_of(rows.begin(), rows.end(), [](const DemoRow& r) { return r.match; });
}

std::string DemoReport::to_text() const {
  std::ostringstream out;
  out << "# A-sample enumeration:";
  if (sample.enumeration.empty()) out << " (empty)";
  for (std::size_t i = 0; i < sample.enumeration.size(); ++i) out << (i == 0 ? " " : ",") << sample.enumeration[i];
  out << "\n";
  out << "# m = leading 1s of h*(1^n 0^ω), h* read off the synthesised conjugacy\n";
  out << "# A finite sample is decidable; the point is that the same procedure\n";
  out << "# recovers the complement of any c.e. A from any conjugacy.\n";
  out << "n,extracted_m,brute_force_m,match\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.extracted << ',' << r.expected << ',' << (r.match ? "yes" : "no") << "\n";
  }
  out << "# " << (all_match() ? "all rows match" : "MISMATCH") << "\n";
  return out.str();
}

DemoReport run_reduction_demo(const CeSample& sample, std::size_t count, SynthOptions options) {
  const Tree p = make_p_tree();
  const Tree q = make_q_tree(sample.enumeration);
  const Homeo h = synth_conjugacy(p, q, pq_order_iso(sample), options);
  const OrderIso extracted = extract_order_iso(h, p, q);
  const auto recovered = recover_ce_complement(extracted, count);
  const auto expected = sample.complement_prefix(count);
  DemoReport report;
  report.sample = sample;
  for (std::size_t n = 0; n < count; ++n) {
    report.rows.push_back(DemoRow{n, recovered[n], expected[n], recovered[n] == expected[n]});
  }
  return report;
}

}  // namespace forge
