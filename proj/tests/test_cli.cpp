#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "forge/cli.hpp"
#include "forge/errors.hpp"

using namespace forge;
using namespace forge::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("forge_cli_test_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::setenv("FORGE_HOME", (dir_ / "store").c_str(), 1);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_cmd(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  std::string out() const { return out_.str(); }
  std::string first_line() const { return out_.str().substr(0, out_.str().find('\n')); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST(SpecFile, RoundTrip) {
  SpecFile a;
  a.kind = SpecFile::Kind::Order;
  a.elements = {3, 1, 2};
  a.lt = {{1, 2}, {2, 3}, {1, 3}};
  a.depth = 7;
  a.precision = 30;
  EXPECT_EQ(parse_spec_file(format_spec_file(a)), a);

  SpecFile b;
  b.kind = SpecFile::Kind::Pipeline;
  b.sample = {1, 3};
  b.count = 4;
  EXPECT_EQ(parse_spec_file(format_spec_file(b)), b);

  const SpecFile c = parse_spec_file("# comment\ntree Q: 1,3  # trailing\nbudget 500\n");
  EXPECT_EQ(c.kind, SpecFile::Kind::Tree);
  EXPECT_EQ(c.tree, "Q: 1,3");
  EXPECT_EQ(c.budget, std::optional<std::size_t>(500));
  EXPECT_EQ(parse_spec_file(format_spec_file(c)), c);
}

TEST(SpecFile, ErrorsCarryPosition) {
  auto where = [](const std::string& text) {
    try {
      parse_spec_file(text);
    } catch (const ParseError& e) {
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair(std::size_t{0}, std::size_t{0});
  };
  EXPECT_EQ(where("tree P\nfrobnicate 3\n"), std::make_pair(std::size_t{2}, std::size_t{1}));
  EXPECT_EQ(where("kind order\nelem 1\nlt 1 x\n"), std::make_pair(std::size_t{3}, std::size_t{6}));
  EXPECT_EQ(where("elem 1\nlt 1 2\n"), std::make_pair(std::size_t{2}, std::size_t{6}));
  EXPECT_EQ(where("tree Q: 1,,2\n").first, 1u);
  EXPECT_NE(where("").first, 0u);
  EXPECT_NE(where("tree P\nsample 1\n").first, 0u);
}

TEST(Store, Sha256KnownValue) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliTest, StoreHandlesAndPrefixes) {
  Store s(dir_ / "s");
  const std::string h = s.put("{\"a\":1}\n");
  EXPECT_EQ(h, sha256_hex("{\"a\":1}\n"));
  EXPECT_EQ(s.put("{\"a\":1}\n"), h);
  EXPECT_EQ(s.get(h), "{\"a\":1}\n");
  EXPECT_EQ(s.get(h.substr(0, 6)), "{\"a\":1}\n");
  EXPECT_THROW(s.get(h.substr(0, 5)), std::exception);
  EXPECT_THROW(s.get("ffffffffffff"), std::exception);
}

TEST_F(CliTest, EvalIdentity) {
  EXPECT_EQ(run_cmd({"eval", "identity", "1/3", "-p", "30"}), kOk);
  EXPECT_EQ(out(), "1/3 ± 2^-30\n");
  EXPECT_EQ(run_cmd({"eval", "reflection", "1/4"}), kOk);
  EXPECT_EQ(first_line(), "3/4 ± 2^-20");
}

TEST_F(CliTest, PlotIdentity) {
  EXPECT_EQ(run_cmd({"plot", "identity", "--samples", "3"}), kOk);
  EXPECT_EQ(out(), "x,f(x)\n0/1,0/1\n1/2,1/2\n1/1,1/1\n");
}

TEST_F(CliTest, BuildIsContentAddressed) {
  ASSERT_EQ(run_cmd({"build", "--tree", "P"}), kOk);
  const std::string h1 = first_line();
  EXPECT_EQ(h1.size(), 64u);
  const fs::path spec = write("p.spec", "# the tree P\nkind tree\ntree P\n");
  ASSERT_EQ(run_cmd({"build", spec.string()}), kOk);
  EXPECT_EQ(first_line(), h1);
  EXPECT_TRUE(fs::exists(dir_ / "store" / "objects" / (h1 + ".json")));
  EXPECT_EQ(run_cmd({"eval", h1.substr(0, 8), "5/9"}), kOk);
  EXPECT_EQ(first_line(), "5/9 ± 2^-20");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cmd({"eval", "nosuch", "1/2"}), kParseError);
  EXPECT_EQ(run_cmd({"eval", "identity", "3/2"}), kDomainError);
  EXPECT_EQ(run_cmd({"eval", "identity", "x/2"}), kParseError);
  EXPECT_EQ(run_cmd({"extract", "identity"}), kDomainError);
  const fs::path bad = write("bad.spec", "kind tree\nbogus 1\n");
  EXPECT_EQ(run_cmd({"build", bad.string()}), kParseError);
  EXPECT_NE(err_.str().find("2:1"), std::string::npos);
  const fs::path order = write("bad_order.spec", "elem 1\nelem 2\nlt 1 2\nlt 2 1\n");
  EXPECT_EQ(run_cmd({"build", order.string()}), kParseError);
  EXPECT_EQ(run_cmd({"frobnicate"}), kParseError);
}

TEST_F(CliTest, VerifyRejectsIdentityBetweenDifferentTrees) {
  ASSERT_EQ(run_cmd({"build", "--tree", "P"}), kOk);
  const std::string p = first_line();
  ASSERT_EQ(run_cmd({"build", "--tree", "Q: 1"}), kOk);
  const std::string q = first_line();
  EXPECT_EQ(run_cmd({"verify", p, q, "identity", "--grid", "10"}), kVerificationFailed);
  EXPECT_NE(out().find("fail"), std::string::npos);
  EXPECT_EQ(run_cmd({"verify", p, p, "identity", "--grid", "5"}), kOk);
}

TEST_F(CliTest, DemoFromSample) {
  EXPECT_EQ(run_cmd({"demo", "--sample", "1,3", "--count", "4"}), kOk);
  EXPECT_NE(out().find("n,extracted_m,brute_force_m,match\n0,0,0,yes\n1,2,2,yes\n2,4,4,yes\n3,5,5,yes\n"),
            std::string::npos);
  const std::string first = out();
  EXPECT_EQ(run_cmd({"demo", "--sample", "1,3", "--count", "4"}), kOk);
  EXPECT_EQ(out(), first);
}

TEST_F(CliTest, SynthAndExtract) {
  ASSERT_EQ(run_cmd({"build", "--tree", "P"}), kOk);
  const std::string p = first_line();
  ASSERT_EQ(run_cmd({"build", "--tree", "Q: 0"}), kOk);
  const std::string q = first_line();
  ASSERT_EQ(run_cmd({"synth", p, q}), kOk);
  const std::string h = first_line();
  ASSERT_EQ(run_cmd({"extract", h, "--depth", "3"}), kOk);
  EXPECT_NE(out().find("path,image\n0^ω,1 0^ω\n1 0^ω,1^2 0^ω\n"), std::string::npos) << out();
  // Extracted orders through ORDER: files.
  write("r.order", "elem 2\nelem 0\nelem 1\nlt 0 1\nlt 1 2\nlt 0 2\n");
  const fs::path spec = write("r.spec", "tree ORDER:r.order\n");
  ASSERT_EQ(run_cmd({"build", spec.string()}), kOk);
  const std::string r = first_line();
  EXPECT_EQ(run_cmd({"synth", r, r}), kOk);
  EXPECT_EQ(run_cmd({"synth", p, r}), kDomainError);
}
