#include <sstream>

#include <gtest/gtest.h>

#include "wedgewar/config.hpp"

using namespace wedgewar;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return run_config_from(KeyValueFile::parse(in, "run.ini"));
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kGood = R"(# sweep over the convex wedge
[sweep]
domain = wedge
eps = 0.1, 0.05
eta = 0.785398
p = 2
n_traj = 100
seed = 0x2a
[horizon]
base_steps = 1e5
exponent = 3
[strategies]
pair = pos_grad_u neg_grad_u
pair = null neg_grad_u
[output]
csv = out/sweep.csv
)";

}  // namespace

TEST(Config, ParsesFullFile) {
  const RunConfig rc = parse(kGood);
  const SweepGrid& g = rc.grid;
  EXPECT_EQ(g.domain, DomainKind::wedge);
  EXPECT_EQ(g.eps, (std::vector<double>{0.1, 0.05}));
  EXPECT_EQ(g.eta.size(), 1u);
  EXPECT_EQ(g.n_traj, 100u);
  EXPECT_EQ(g.seed, 42u);
  EXPECT_EQ(g.horizon.base_steps, 1e5);
  EXPECT_EQ(g.horizon.exponent, 3.0);
  EXPECT_EQ(g.horizon.ref_eps, 0.1);
  ASSERT_EQ(g.pairs.size(), 2u);
  EXPECT_EQ(g.pairs[1].one, "null");
  EXPECT_EQ(rc.csv_path, "out/sweep.csv");
  EXPECT_EQ(rc.format, "csv");
}

TEST(Config, MissingFieldIsNamed) {
  std::string t = kGood;
  t.erase(t.find("n_traj = 100\n"), 13);
  EXPECT_NE(message_of(t).find("missing required field 'sweep.n_traj'"), std::string::npos) << message_of(t);
}

TEST(Config, UnknownKeyHasLineNumber) {
  std::string t = kGood;
  t.insert(t.find("[horizon]"), "colour = blue\n");
  EXPECT_NE(message_of(t).find("run.ini:9: unknown field 'sweep.colour'"), std::string::npos) << message_of(t);
}

TEST(Config, BadNumberHasLineNumber) {
  std::string t = kGood;
  t.replace(t.find("p = 2"), 5, "p = two");
  EXPECT_NE(message_of(t).find("run.ini:6:"), std::string::npos) << message_of(t);
}

TEST(Config, SemanticChecks) {
  std::string t = kGood;
  t.replace(t.find("domain = wedge"), 14, "domain = half_plane");
  EXPECT_NE(message_of(t).find("not used by half_plane"), std::string::npos);
  t = kGood;
  t.replace(t.find("pair = null neg_grad_u"), 22, "pair = null");
  EXPECT_NE(message_of(t).find("exactly two"), std::string::npos);
  t = kGood;
  t.replace(t.find("pair = null neg_grad_u"), 22, "pair = null warp");
  EXPECT_NE(message_of(t).find("unknown strategy 'warp'"), std::string::npos);
  t = kGood;
  t.replace(t.find("eps = 0.1, 0.05"), 15, "eps = 0.1, -1");
  EXPECT_NE(message_of(t).find("must be positive"), std::string::npos);
  t = kGood;
  t.insert(0, "stray = 1\n");
  EXPECT_NE(message_of(t).find("run.ini:1: key outside"), std::string::npos);
  t = kGood;
  t += "[extras]\nx = 1\n";
  EXPECT_NE(message_of(t).find("unknown section [extras]"), std::string::npos);
  t = kGood;
  t += "format = xml\n";
  EXPECT_NE(message_of(t).find("csv or json"), std::string::npos);
}

TEST(Config, DuplicateScalar) {
  std::string t = kGood;
  t.insert(t.find("[horizon]"), "seed = 7\n");
  EXPECT_NE(message_of(t).find("more than once"), std::string::npos);
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(load_run_config("/nonexistent/run.ini"), IoError); }
