#pragma once

// The forge command line: spec files, the artifact store and the commands
// build, eval, plot, synth, verify, demo and extract.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/order_encode.hpp"

namespace forge::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kParseError = 2,
  kBudgetExhausted = 3,
  kDomainError = 4,
};

struct SpecFile {
  enum class Kind { Tree, Order, Pipeline };
  Kind kind = Kind::Tree;
  /// Tree kind: P, FULL, Q: a,b,... or ORDER:<file>.
  std::string tree;
  /// Order kind, in enumeration order.
  std::vector<ElementId> elements;
  /// (a, b) means a < b.
  std::vector<std::pair<ElementId, ElementId>> lt;
  /// Pipeline kind.
  std::vector<std::uint64_t> sample;

  std::optional<unsigned> precision;
  std::optional<std::size_t> depth;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> count;

  bool operator==(const SpecFile&) const = default;
};

/// One directive per line, `#` starts a comment. Throws ParseError with the
/// line and column of the offending token.
SpecFile parse_spec_file(std::string_view text);

/// Text that parse_spec_file reads back to an equal SpecFile.
std::string format_spec_file(const SpecFile& spec);

/// Content-addressed store: each artifact is canonical JSON saved under the
/// SHA-256 of its bytes.
class Store {
 public:
  explicit Store(std::filesystem::path root);
  /// $FORGE_HOME if set, otherwise ./.forge
  static Store open_default();

  const std::filesystem::path& root() const noexcept { return root_; }
  /// Writes the text (if new) and returns its handle.
  std::string put(const std::string& canonical_text);
  /// Accepts a full handle or a unique prefix of at least 6 hex digits.
  std::string get(std::string_view handle) const;

 private:
  std::filesystem::path root_;
};

std::string sha256_hex(std::string_view data);

/// Runs one command. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace forge::cli
