#include "forge/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <json.hpp>

#include "forge/cantor_tree.hpp"
#include "forge/conjugacy.hpp"
#include "forge/dynamics.hpp"
#include "forge/errors.hpp"
#include "forge/exact_arith.hpp"
#include "forge/reduction.hpp"

#include <unistd.h>

namespace forge::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Handles that are not applicable to the requested command.
class TypeMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

constexpr unsigned kDefaultPrecision = 20;
constexpr std::size_t kDefaultBudget = 10000;
constexpr std::size_t kDefaultGrid = 100;
constexpr std::size_t kDefaultCount = 5;
constexpr std::size_t kDefaultSamples = 101;
constexpr std::size_t kDefaultExtractDepth = 12;

struct Token {
  std::string text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_words(std::string_view line, std::size_t from) {
  std::vector<Token> out;
  std::size_t i = from;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back(Token{std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

std::uint64_t parse_natural(const Token& t, std::size_t line) {
  if (t.text.empty() || t.text.size() > 19 ||
      !std::all_of(t.text.begin(), t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ParseError("expected a natural number, got '" + t.text + "'", line, t.column);
  }
  return std::stoull(t.text);
}

std::vector<std::uint64_t> parse_natural_list(std::string_view text, std::size_t line, std::size_t col0) {
  std::vector<std::uint64_t> out;
  std::set<std::uint64_t> seen;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip();
  if (i == text.size()) return out;
  while (true) {
    skip();
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ',') ++i;
    const Token t{std::string(text.substr(start, i - start)), col0 + start};
    const auto v = parse_natural(t, line);
    if (!seen.insert(v).second) throw ParseError("sample repeats " + t.text, line, t.column);
    out.push_back(v);
    skip();
    if (i == text.size()) break;
    if (text[i] != ',') throw ParseError("expected ','", line, col0 + i);
    ++i;
  }
  return out;
}

}  // namespace

SpecFile parse_spec_file(std::string_view text) {
  SpecFile spec;
  std::optional<SpecFile::Kind> declared;
  std::optional<SpecFile::Kind> implied;
  std::size_t implied_line = 0;
  std::size_t implied_col = 0;
  bool have_tree = false;
  bool have_sample = false;
  std::set<std::string> seen_settings;

  auto imply = [&](SpecFile::Kind k, std::size_t line, std::size_t col, const std::string& key) {
    if (implied && *implied != k) throw ParseError("directive '" + key + "' does not fit this spec kind", line, col);
    if (!implied) {
      implied = k;
      implied_line = line;
      implied_col = col;
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto words = split_words(line, 0);
    if (words.empty()) continue;
    const Token& key = words.front();
    const std::size_t rest_begin = key.column - 1 + key.text.size();
    auto expect_args = [&](std::size_t n) {
      if (words.size() - 1 != n) {
        const std::size_t col = words.size() > n + 1 ? words[n + 1].column : rest_begin + 1;
        throw ParseError("'" + key.text + "' takes " + std::to_string(n) + " argument(s)", line_no, col);
      }
    };

    if (key.text == "kind") {
      expect_args(1);
      const auto& v = words[1];
      if (declared) throw ParseError("kind given twice", line_no, key.column);
      if (v.text == "tree") {
        declared = SpecFile::Kind::Tree;
      } else if (v.text == "order") {
        declared = SpecFile::Kind::Order;
      } else if (v.text == "pipeline") {
        declared = SpecFile::Kind::Pipeline;
      } else {
        throw ParseError("unknown kind '" + v.text + "' (expected tree, order or pipeline)", line_no, v.column);
      }
    } else if (key.text == "tree") {
      imply(SpecFile::Kind::Tree, line_no, key.column, key.text);
      if (have_tree) throw ParseError("tree given twice", line_no, key.column);
      std::string_view body = line.substr(rest_begin);
      std::size_t lead = 0;
      while (lead < body.size() && std::isspace(static_cast<unsigned char>(body[lead]))) ++lead;
      body.remove_prefix(lead);
      while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
      const std::size_t col0 = rest_begin + lead + 1;
      if (body.empty()) throw ParseError("tree needs a spec", line_no, col0);
      if (body.substr(0, 6) == "ORDER:") {
        if (body.size() == 6) throw ParseError("ORDER: needs a file name", line_no, col0 + 6);
        spec.tree = std::string(body);
      } else {
        try {
          spec.tree = parse_tree_spec(body).spec();
        } catch (const ParseError& e) {
          throw ParseError(e.message(), line_no, col0 + e.column() - 1);
        }
      }
      have_tree = true;
    } else if (key.text == "elem") {
      imply(SpecFile::Kind::Order, line_no, key.column, key.text);
      expect_args(1);
      const auto a = parse_natural(words[1], line_no);
      if (std::find(spec.elements.begin(), spec.elements.end(), a) != spec.elements.end()) {
        throw ParseError("element " + words[1].text + " listed twice", line_no, words[1].column);
      }
      spec.elements.push_back(a);
    } else if (key.text == "lt") {
      imply(SpecFile::Kind::Order, line_no, key.column, key.text);
      expect_args(2);
      const auto a = parse_natural(words[1], line_no);
      const auto b = parse_natural(words[2], line_no);
      for (std::size_t k = 1; k <= 2; ++k) {
        const auto v = k == 1 ? a : b;
        if (std::find(spec.elements.begin(), spec.elements.end(), v) == spec.elements.end()) {
          throw ParseError("element " + words[k].text + " is not listed by an earlier 'elem'", line_no, words[k].column);
        }
      }
      spec.lt.emplace_back(a, b);
    } else if (key.text == "sample") {
      imply(SpecFile::Kind::Pipeline, line_no, key.column, key.text);
      if (have_sample) throw ParseError("sample given twice", line_no, key.column);
      spec.sample = parse_natural_list(line.substr(rest_begin), line_no, rest_begin + 1);
      have_sample = true;
    } else if (key.text == "precision" || key.text == "depth" || key.text == "budget" || key.text == "grid" ||
               key.text == "count") {
      expect_args(1);
      if (!seen_settings.insert(key.text).second) throw ParseError(key.text + " given twice", line_no, key.column);
      const auto v = parse_natural(words[1], line_no);
      if (key.text == "precision") {
        if (v > 100000) throw ParseError("precision too large", line_no, words[1].column);
        spec.precision = static_cast<unsigned>(v);
      } else if (key.text == "depth") {
        spec.depth = v;
      } else if (key.text == "budget") {
        spec.budget = v;
      } else if (key.text == "grid") {
        if (v < 2) throw ParseError("grid needs at least 2 points", line_no, words[1].column);
        spec.grid = v;
      } else {
        spec.count = v;
      }
    } else {
      throw ParseError("unknown directive '" + key.text + "'", line_no, key.column);
    }
  }

  if (declared && implied && *declared != *implied) {
    throw ParseError("directive does not fit the declared kind", implied_line, implied_col);
  }
  if (!declared && !implied) throw ParseError("empty spec: no kind, tree, elem or sample directive", line_no, 1);
  spec.kind = declared ? *declared : *implied;
  switch (spec.kind) {
    case SpecFile::Kind::Tree:
      if (!have_tree) throw ParseError("tree spec without a 'tree' directive", line_no, 1);
      break;
    case SpecFile::Kind::Order:
      if (spec.elements.empty()) throw ParseError("order spec without elements", line_no, 1);
      break;
    case SpecFile::Kind::Pipeline:
      if (!have_sample) throw ParseError("pipeline spec without a 'sample' directive", line_no, 1);
      break;
  }
  return spec;
}

std::string format_spec_file(const SpecFile& spec) {
  std::ostringstream out;
  switch (spec.kind) {
    case SpecFile::Kind::Tree:
      out << "kind tree\n";
      out << "tree " << spec.tree << "\n";
      break;
    case SpecFile::Kind::Order:
      out << "kind order\n";
      for (const auto a : spec.elements) out << "elem " << a << "\n";
      for (const auto& [a, b] : spec.lt) out << "lt " << a << " " << b << "\n";
      break;
    case SpecFile::Kind::Pipeline:
      out << "kind pipeline\n";
      out << "sample";
      for (std::size_t i = 0; i < spec.sample.size(); ++i) out << (i == 0 ? " " : ",") << spec.sample[i];
      out << "\n";
      break;
  }
  if (spec.precision) out << "precision " << *spec.precision << "\n";
  if (spec.depth) out << "depth " << *spec.depth << "\n";
  if (spec.budget) out << "budget " << *spec.budget << "\n";
  if (spec.grid) out << "grid " << *spec.grid << "\n";
  if (spec.count) out << "count " << *spec.count << "\n";
  return out.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Store::Store(fs::path root) : root_(std::move(root)) {}

Store Store::open_default() {
  if (const char* home = std::getenv("FORGE_HOME"); home != nullptr && *home != '\0') return Store(home);
  return Store(".forge");
}

std::string Store::put(const std::string& canonical_text) {
  const std::string handle = sha256_hex(canonical_text);
  const fs::path dir = root_ / "objects";
  const fs::path target = dir / (handle + ".json");
  if (fs::exists(target)) return handle;
  fs::create_directories(dir);
  const fs::path tmp = dir / (handle + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << canonical_text;
    f.flush();
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  return handle;
}

namespace {

class HandleError : public Error {
 public:
  using Error::Error;
};

bool is_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || (c >= 'a' && c <= 'f'); });
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw HandleError("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

std::string Store::get(std::string_view handle) const {
  if (handle.size() < 6 || handle.size() > 64 || !is_hex(handle)) {
    throw HandleError("'" + std::string(handle) + "' is not a handle");
  }
  const fs::path dir = root_ / "objects";
  if (handle.size() == 64) {
    const fs::path p = dir / (std::string(handle) + ".json");
    if (!fs::exists(p)) throw HandleError("no artifact " + std::string(handle) + " in " + root_.string());
    return read_file(p);
  }
  std::vector<fs::path> hits;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() == 69 && name.ends_with(".json") && name.starts_with(handle)) hits.push_back(entry.path());
    }
  }
  if (hits.empty()) throw HandleError("no artifact " + std::string(handle) + " in " + root_.string());
  if (hits.size() > 1) throw HandleError("handle prefix " + std::string(handle) + " is ambiguous");
  return read_file(hits.front());
}

namespace {

// ---- artifacts ----

std::string canonical(const json& j) { return j.dump() + "\n"; }

json settings_json(const SpecFile& spec) {
  json s = json::object();
  s["precision"] = spec.precision.value_or(kDefaultPrecision);
  s["budget"] = spec.budget.value_or(kDefaultBudget);
  s["grid"] = spec.grid.value_or(kDefaultGrid);
  if (spec.depth) s["depth"] = *spec.depth;
  if (spec.count) s["count"] = *spec.count;
  return s;
}

json order_artifact(const SpecFile& spec, const json& settings) {
  auto lt = spec.lt;
  std::sort(lt.begin(), lt.end());
  lt.erase(std::unique(lt.begin(), lt.end()), lt.end());
  json j;
  j["kind"] = "order";
  j["elements"] = spec.elements;
  j["lt"] = json::array();
  for (const auto& [a, b] : lt) j["lt"].push_back({a, b});
  j["depth"] = spec.depth.value_or(spec.elements.size() + 2);
  j["settings"] = settings;
  return j;
}

LabeledTree order_tree(const json& art) {
  const auto elements = art.at("elements").get<std::vector<ElementId>>();
  const std::size_t depth = art.at("depth").get<std::size_t>();
  if (depth < elements.size()) {
    throw DomainError("order depth " + std::to_string(depth) + " is below the " + std::to_string(elements.size()) +
                      " elements, some would never be labelled");
  }
  auto table = std::make_shared<std::set<std::pair<ElementId, ElementId>>>();
  for (const auto& p : art.at("lt")) table->emplace(p.at(0).get<ElementId>(), p.at(1).get<ElementId>());
  const auto r = finite_order(elements, [table](ElementId a, ElementId b) { return table->count({a, b}) != 0; });
  return build_order_tree(r, depth, "ORDER");
}

json build_artifact(const SpecFile& spec, const fs::path& base_dir) {
  const json settings = settings_json(spec);
  json j;
  switch (spec.kind) {
    case SpecFile::Kind::Tree:
      if (spec.tree.starts_with("ORDER:")) {
        const fs::path file = base_dir / spec.tree.substr(6);
        std::ifstream f(file);
        if (!f) throw ParseError("cannot open order file " + file.string(), 1, 1);
        std::ostringstream s;
        s << f.rdbuf();
        SpecFile order;
        try {
          order = parse_spec_file(s.str());
        } catch (const ParseError& e) {
          throw ParseError(e.message() + " (in " + file.string() + ")", e.line(), e.column());
        }
        if (order.kind != SpecFile::Kind::Order) throw ParseError(file.string() + " is not an order spec", 1, 1);
        if (!order.depth) order.depth = spec.depth;
        j = order_artifact(order, settings);
      } else {
        j["kind"] = "tree";
        j["tree"] = spec.tree;
        j["settings"] = settings;
      }
      break;
    case SpecFile::Kind::Order:
      j = order_artifact(spec, settings);
      break;
    case SpecFile::Kind::Pipeline:
      j["kind"] = "pipeline";
      j["sample"] = spec.sample;
      j["count"] = spec.count.value_or(kDefaultCount);
      j["settings"] = settings;
      break;
  }
  if (j["kind"] == "order") order_tree(j);  // surfaces MalformedOrder before the artifact is stored
  return j;
}

json load(const Store& store, std::string_view handle) {
  if (handle == "identity") return json{{"kind", "identity"}};
  if (handle == "reflection") return json{{"kind", "reflection"}};
  return json::parse(store.get(handle));
}

const std::string& kind_of(const json& art) { return art.at("kind").get_ref<const std::string&>(); }

std::size_t setting(const json& art, const char* key, std::size_t fallback) {
  if (art.contains("settings") && art["settings"].contains(key)) return art["settings"][key].get<std::size_t>();
  return fallback;
}

Tree tree_of(const json& art) {
  const auto& k = kind_of(art);
  if (k == "tree") return parse_tree_spec(art.at("tree").get<std::string>());
  if (k == "order") return order_tree(art).tree();
  throw TypeMismatch("a " + k + " artifact has no tree");
}

// The A-sample of a P or Q tree artifact; P is Q with A empty.
std::optional<std::vector<std::uint64_t>> pq_sample(const json& art) {
  if (kind_of(art) != "tree") return std::nullopt;
  const auto spec = art.at("tree").get<std::string>();
  if (spec == "P") return std::vector<std::uint64_t>{};
  if (!spec.starts_with("Q:")) return std::nullopt;
  return parse_natural_list(std::string_view(spec).substr(2), 1, 3);
}

OrderIso inverse(OrderIso iso) { return OrderIso{std::move(iso.backward), std::move(iso.forward)}; }

OrderIso compose(OrderIso first, OrderIso second) {
  return OrderIso{[f = first.forward, g = second.forward](const Path& x) { return g(f(x)); },
                  [f = first.backward, g = second.backward](const Path& y) { return f(g(y)); }};
}

// The order isomorphism between the path sets that synth uses.
OrderIso hstar_between(const json& src, const json& dst) {
  const auto a = pq_sample(src);
  const auto b = pq_sample(dst);
  if (a && b) {
    if (*a == *b) return identity_order_iso();
    if (a->empty()) return pq_order_iso(CeSample{*b});
    if (b->empty()) return inverse(pq_order_iso(CeSample{*a}));
    return compose(inverse(pq_order_iso(CeSample{*a})), pq_order_iso(CeSample{*b}));
  }
  if (kind_of(src) == "tree" && kind_of(dst) == "tree" && src.at("tree") == "FULL" && dst.at("tree") == "FULL") {
    return identity_order_iso();
  }
  if (kind_of(src) == "order" && kind_of(dst) == "order") {
    try {
      return label_order_iso(order_tree(src), order_tree(dst));
    } catch (const std::invalid_argument& e) {
      throw TypeMismatch(e.what());
    }
  }
  std::string what = "no order isomorphism known between ";
  what += kind_of(src) == "tree" ? src.at("tree").get<std::string>() : kind_of(src);
  what += " and ";
  what += kind_of(dst) == "tree" ? dst.at("tree").get<std::string>() : kind_of(dst);
  throw TypeMismatch(what);
}

SynthOptions synth_options(const json& art) {
  SynthOptions o;
  o.iteration_budget = setting(art, "budget", kDefaultBudget);
  return o;
}

Homeo homeo_of(const json& art) {
  const auto& k = kind_of(art);
  if (k == "identity") return identity_homeo();
  if (k == "reflection") return reflection_homeo();
  if (k == "conjugacy") {
    const json& src = art.at("source");
    const json& dst = art.at("target");
    return synth_conjugacy(tree_of(src), tree_of(dst), hstar_between(src, dst), synth_options(art));
  }
  throw TypeMismatch("a " + k + " artifact is not a homeomorphism");
}

FunctionCode function_of(const json& art) {
  const auto& k = kind_of(art);
  if (k == "tree" || k == "order") return build_dynamics(tree_of(art));
  if (k == "identity" || k == "reflection" || k == "conjugacy") return homeo_of(art).fn;
  throw TypeMismatch("a " + k + " artifact is not a function");
}

std::string with_error(const Rational& v, Precision p) { return to_string(v) + " ± 2^-" + std::to_string(p); }

Rational parse_point(const std::string& text) {
  const Rational x = parse_rational(text);
  if (x < 0 || x > 1) throw DomainError(text + " lies outside [0,1]");
  return x;
}

// ---- commands ----

struct Common {
  std::optional<unsigned> precision;
  std::optional<std::size_t> depth;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> count;
  std::optional<std::size_t> samples;
};

int cmd_build(const std::string& file, const std::optional<std::string>& inline_tree, const Common& c,
              std::ostream& out) {
  SpecFile spec;
  fs::path base = ".";
  if (inline_tree) {
    spec = parse_spec_file("tree " + *inline_tree);
  } else {
    std::ifstream f(file);
    if (!f) throw ParseError("cannot open spec file " + file, 0, 0);
    std::ostringstream s;
    s << f.rdbuf();
    try {
      spec = parse_spec_file(s.str());
    } catch (const ParseError& e) {
      throw ParseError(e.message() + " (in " + file + ")", e.line(), e.column());
    }
    base = fs::path(file).parent_path();
    if (base.empty()) base = ".";
  }
  if (c.precision) spec.precision = c.precision;
  if (c.depth) spec.depth = c.depth;
  if (c.budget) spec.budget = c.budget;
  if (c.grid) spec.grid = c.grid;
  if (c.count) spec.count = c.count;
  const json art = build_artifact(spec, base);
  out << Store::open_default().put(canonical(art)) << "\n";
  return kOk;
}

int cmd_eval(const std::string& handle, const std::string& x_text, const Common& c, std::ostream& out) {
  const json art = load(Store::open_default(), handle);
  const Rational x = parse_point(x_text);
  const Precision p = c.precision.value_or(static_cast<unsigned>(setting(art, "precision", kDefaultPrecision)));
  const FunctionCode f = function_of(art);
  const RealCode y = f.rational_eval(x);
  out << with_error(y.exact_value() ? *y.exact_value() : y.approx(p), p) << "\n";
  return kOk;
}

int cmd_plot(const std::string& handle, const Common& c, std::ostream& out) {
  const json art = load(Store::open_default(), handle);
  const Precision p = c.precision.value_or(static_cast<unsigned>(setting(art, "precision", kDefaultPrecision)));
  const std::size_t samples = c.samples.value_or(kDefaultSamples);
  if (samples < 2) throw ParseError("plot needs at least 2 samples", 0, 0);
  const FunctionCode f = function_of(art);
  out << "x,f(x)\n";
  for (const auto& x : uniform_grid(samples)) {
    const RealCode y = f.rational_eval(x);
    out << to_string(x) << ',' << to_string(y.exact_value() ? *y.exact_value() : y.approx(p)) << "\n";
  }
  return kOk;
}

int cmd_synth(const std::string& src_handle, const std::string& dst_handle, const Common& c, std::ostream& out) {
  Store store = Store::open_default();
  const json src = load(store, src_handle);
  const json dst = load(store, dst_handle);
  for (const json* a : {&src, &dst}) {
    if (kind_of(*a) != "tree" && kind_of(*a) != "order") {
      throw TypeMismatch("synth needs tree or order artifacts, got " + kind_of(*a));
    }
  }
  hstar_between(src, dst);
  json art;
  art["kind"] = "conjugacy";
  art["source"] = src;
  art["target"] = dst;
  json settings = json::object();
  settings["budget"] = c.budget.value_or(setting(src, "budget", kDefaultBudget));
  settings["precision"] = c.precision.value_or(static_cast<unsigned>(setting(src, "precision", kDefaultPrecision)));
  settings["grid"] = c.grid.value_or(setting(src, "grid", kDefaultGrid));
  art["settings"] = settings;
  // Builds the homeomorphism once so inconsistent endpoints surface here.
  homeo_of(art);
  out << store.put(canonical(art)) << "\n";
  return kOk;
}

int cmd_verify(const std::string& f_handle, const std::string& g_handle, const std::string& h_handle, const Common& c,
               std::ostream& out) {
  const Store store = Store::open_default();
  const json f_art = load(store, f_handle);
  const json g_art = load(store, g_handle);
  const json h_art = load(store, h_handle);
  for (const json* a : {&f_art, &g_art}) {
    if (kind_of(*a) != "tree" && kind_of(*a) != "order") {
      throw TypeMismatch("verify needs tree or order artifacts for f and g, got " + kind_of(*a));
    }
  }
  const Precision p = c.precision.value_or(static_cast<unsigned>(setting(h_art, "precision", kDefaultPrecision)));
  const std::size_t grid = c.grid.value_or(setting(h_art, "grid", kDefaultGrid));
  if (grid < 2) throw ParseError("verify needs at least 2 grid points", 0, 0);
  json h_eff = h_art;
  if (c.budget && kind_of(h_eff) == "conjugacy") h_eff["settings"]["budget"] = *c.budget;
  const auto report = verify_conjugacy(function_of(f_art), function_of(g_art), homeo_of(h_eff), uniform_grid(grid), p);
  out << report.to_csv();
  if (report.count(Verdict::Fail) != 0 || !report.monotone || !report.endpoints_fixed) return kVerificationFailed;
  if (report.count(Verdict::Exhausted) != 0) return kBudgetExhausted;
  if (report.count(Verdict::Undetermined) != 0) return kVerificationFailed;
  return kOk;
}

int cmd_demo(const std::optional<std::string>& handle, const std::optional<std::string>& sample_text, const Common& c,
             std::ostream& out) {
  CeSample sample;
  std::size_t count = kDefaultCount;
  SynthOptions options;
  if (handle && sample_text) throw ParseError("demo takes a handle or --sample, not both", 0, 0);
  if (sample_text) {
    sample.enumeration = parse_natural_list(*sample_text, 1, 1);
  } else if (handle) {
    const json art = load(Store::open_default(), *handle);
    if (kind_of(art) == "pipeline") {
      sample.enumeration = art.at("sample").get<std::vector<std::uint64_t>>();
      count = art.at("count").get<std::size_t>();
    } else if (const auto s = pq_sample(art)) {
      sample.enumeration = *s;
      count = setting(art, "count", kDefaultCount);
    } else {
      throw TypeMismatch("demo needs a pipeline, P or Q artifact, got " + kind_of(art));
    }
    options = synth_options(art);
  } else {
    throw ParseError("demo needs a handle or --sample", 0, 0);
  }
  if (c.count) count = *c.count;
  if (c.budget) options.iteration_budget = *c.budget;
  const auto report = run_reduction_demo(sample, count, options);
  out << report.to_text();
  return report.all_match() ? kOk : kVerificationFailed;
}

int cmd_extract(const std::string& handle, const Common& c, std::ostream& out) {
  const json art = load(Store::open_default(), handle);
  if (kind_of(art) != "conjugacy") throw TypeMismatch("extract needs a conjugacy artifact, got " + kind_of(art));
  const std::size_t depth = c.depth.value_or(c.count.value_or(kDefaultExtractDepth));
  const Tree p = tree_of(art.at("source"));
  const Tree q = tree_of(art.at("target"));
  const OrderIso iso = extract_order_iso(homeo_of(art), p, q);
  out << "# h*(X) = c^-1(h(c(X))) read off the conjugacy, " << p.spec() << " -> " << q.spec() << "\n";
  out << "path,image\n";
  for (std::size_t n = 0; n <= depth; ++n) {
    const Path x = Path::eventually(BitString::repeat(true, n), false);
    if (!p.contains_path(*x.eventual())) continue;
    out << x.to_string() << ',' << iso.forward(x).to_string() << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"forge: interval dynamics from binary trees, conjugacies and their order isomorphisms"};
  app.name("forge");
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool samples) {
    sub->add_option("--precision,-p", c.precision, "output precision p (error at most 2^-p)");
    sub->add_option("--depth", c.depth, "tree depth");
    sub->add_option("--budget", c.budget, "iteration budget");
    sub->add_option("--grid", c.grid, "grid points for verify")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    sub->add_option("--count", c.count, "rows for demo");
    if (samples) sub->add_option("--samples", c.samples, "plot samples");
  };

  std::string spec_file;
  std::optional<std::string> inline_tree;
  auto* build = app.add_subcommand("build", "store an artifact from a spec file and print its handle");
  build->add_option("spec", spec_file, "spec file");
  build->add_option("--tree", inline_tree, "inline tree spec such as P, FULL or \"Q: 1,3\"");
  add_common(build, false);

  std::string h1, h2, h3, x_text;
  auto* eval = app.add_subcommand("eval", "evaluate a stored function at a rational point");
  eval->add_option("handle", h1)->required();
  eval->add_option("x", x_text)->required();
  add_common(eval, false);

  auto* plot = app.add_subcommand("plot", "CSV of x,f(x) on equally spaced points");
  plot->add_option("handle", h1)->required();
  add_common(plot, true);

  auto* synth = app.add_subcommand("synth", "store the conjugacy from a source to a target tree");
  synth->add_option("source", h1)->required();
  synth->add_option("target", h2)->required();
  add_common(synth, false);

  auto* verify = app.add_subcommand("verify", "check h o f = g o h on a grid, CSV report");
  verify->add_option("f_handle", h1)->required();
  verify->add_option("g_handle", h2)->required();
  verify->add_option("h_handle", h3)->required();
  add_common(verify, false);

  std::optional<std::string> demo_handle;
  std::optional<std::string> demo_sample;
  auto* demo = app.add_subcommand("demo", "read the complement of an A-sample back out of a conjugacy");
  demo->add_option("handle", demo_handle, "pipeline or Q artifact");
  demo->add_option("--sample", demo_sample, "A-sample such as \"1,3\"");
  add_common(demo, false);

  auto* extract = app.add_subcommand("extract", "print h* on the paths 1^n 0^ω");
  extract->add_option("handle", h1)->required();
  add_common(extract, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "forge: " << e.what() << "\n";
    return kParseError;
  }

  try {
    if (build->parsed()) {
      if (spec_file.empty() == !inline_tree.has_value()) throw ParseError("build takes a spec file or --tree", 0, 0);
      return cmd_build(spec_file, inline_tree, c, out);
    }
    if (eval->parsed()) return cmd_eval(h1, x_text, c, out);
    if (plot->parsed()) return cmd_plot(h1, c, out);
    if (synth->parsed()) return cmd_synth(h1, h2, c, out);
    if (verify->parsed()) return cmd_verify(h1, h2, h3, c, out);
    if (demo->parsed()) return cmd_demo(demo_handle, demo_sample, c, out);
    if (extract->parsed()) return cmd_extract(h1, c, out);
  } catch (const ParseError& e) {
    err << "forge: parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const MalformedOrder& e) {
    err << "forge: malformed order: " << e.what() << "\n";
    return kParseError;
  } catch (const HandleError& e) {
    err << "forge: " << e.what() << "\n";
    return kParseError;
  } catch (const json::exception& e) {
    err << "forge: corrupt artifact: " << e.what() << "\n";
    return kParseError;
  } catch (const BudgetExhausted& e) {
    err << "forge: budget exhausted: " << e.what() << "\n";
    return kBudgetExhausted;
  } catch (const PrecisionExhausted& e) {
    err << "forge: precision exhausted: " << e.what() << "\n";
    return kBudgetExhausted;
  } catch (const TypeMismatch& e) {
    err << "forge: type mismatch: " << e.what() << "\n";
    return kDomainError;
  } catch (const Error& e) {
    err << "forge: " << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    err << "forge: " << e.what() << "\n";
    return kDomainError;
  }
  return kParseError;
}

}  // namespace forge::cli
