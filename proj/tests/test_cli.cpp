#include <array>
#include <cstdio>
#include <memory>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

namespace {

using nlohmann::json;

struct Run {
  int code = -1;
  std::string out;
  json doc() const { return json::parse(out); }
};

// stderr is dropped; only stdout is captured.
Run lecam(const std::string& args) {
  const std::string cmd = std::string(LECAM_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(LECAM_DATA_DIR) + "/" + name; }

TEST(Cli, ValueOfBinarySymmetricChannel) {
  const auto r = lecam("value " + data("bsc.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  // Majority vote errs with probability 0.1 under either theta.
  EXPECT_NEAR(r.doc()["value"].get<double>(), 0.1, 1e-12);
  EXPECT_EQ(r.doc()["bayes_rule"], json({{"x0", "h0"}, {"x1", "h1"}}));
}

TEST(Cli, ValueOfIdentityIsZero) {
  const auto r = lecam("value " + data("identity.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["value"].get<double>(), 0.0);
}

TEST(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(lecam("value " + data("bad_column.json")).code, 2);
  EXPECT_EQ(lecam("value " + data("no_such_file.json")).code, 2);
  EXPECT_EQ(lecam("value " + data("constant_vs_identity.json")).code, 2);  // two kernels, none chosen
  EXPECT_EQ(lecam("deficiency " + data("bsc.json") + " T Missing --sup").code, 2);
  EXPECT_EQ(lecam("deficiency " + data("bsc.json") + " T T --sup --prior pi").code, 2);
  EXPECT_EQ(lecam("value " + data("uniform4.json") + " --max-dim 3").code, 2);
  EXPECT_EQ(lecam("verify --suite nope").code, 2);
  EXPECT_EQ(lecam("verify --max-dim 33").code, 2);
  EXPECT_EQ(lecam("verify --trials 0").code, 2);
  EXPECT_EQ(lecam("").code, 2);
}

TEST(Cli, SpaceMismatchExitsThree) {
  EXPECT_EQ(lecam("deficiency " + data("mismatch.json") + " T S --sup").code, 3);
  EXPECT_EQ(lecam("deficiency " + data("mismatch.json") + " S T --prior pi").code, 3);
}

TEST(Cli, DeficiencyConstantVersusIdentity) {
  const std::string f = data("constant_vs_identity.json");
  for (const std::string mode : {"--prior uniform", "--sup"}) {
    SCOPED_TRACE(mode);
    const auto r = lecam("deficiency " + f + " const id " + mode);
    ASSERT_EQ(r.code, 0);
    // Any guess ignoring the data is wrong on one of the two thetas: l1 distance 2 there, 0 on the other.
    EXPECT_NEAR(r.doc()["delta"].get<double>(), 1.0, 1e-7);
    EXPECT_FALSE(r.doc()["factors_through"].get<bool>());
  }
  const auto back = lecam("deficiency " + f + " id const --sup");
  ASSERT_EQ(back.code, 0);
  EXPECT_NEAR(back.doc()["delta"].get<double>(), 0.0, 1e-9);
  EXPECT_TRUE(back.doc()["factors_through"].get<bool>());
  EXPECT_EQ(back.doc()["witness"]["matrix"], json({{1.0, 1.0}}));
}

TEST(Cli, DeficiencyOfKernelWithItself) {
  const auto r = lecam("deficiency " + data("bsc.json") + " T T");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(r.doc()["delta"].get<double>(), 0.0, 1e-9);
  EXPECT_TRUE(r.doc()["factors_through"].get<bool>());
}

TEST(Cli, AutoencodeUniformFour) {
  for (int seed : {0, 1, 17}) {
    const auto r = lecam("autoencode " + data("uniform4.json") + " --latent 2 --seed " + std::to_string(seed));
    ASSERT_EQ(r.code, 0);
    // Two of four equally likely inputs survive a 2-letter code.
    EXPECT_NEAR(r.doc()["epsilon"].get<double>(), 1.0, 1e-12);
  }
  const auto full = lecam("autoencode " + data("uniform4.json") + " --latent 4");
  ASSERT_EQ(full.code, 0);
  EXPECT_EQ(full.doc()["epsilon"].get<double>(), 0.0);
  const auto decoded = full.doc()["decoder_map"];
  for (const auto& [x, z] : full.doc()["encoder_map"].items()) EXPECT_EQ(decoded[z.get<std::string>()], x);
}

TEST(Cli, StackReportsBound) {
  const auto r = lecam("stack " + data("uniform4.json") + " --sizes 2,1");
  ASSERT_EQ(r.code, 0);
  const auto d = r.doc();
  ASSERT_EQ(d["layers"].size(), 2u);
  EXPECT_NEAR(d["layers"][0]["epsilon"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(d["layers"][1]["epsilon"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(d["total_epsilon"].get<double>(), 1.5, 1e-12);
  EXPECT_NEAR(d["bound"].get<double>(), 2.0, 1e-12);
  EXPECT_TRUE(d["within_bound"].get<bool>());
  EXPECT_EQ(lecam("stack " + data("uniform4.json") + " --sizes 2,0").code, 2);
}

TEST(Cli, InformationBottleneck) {
  const std::string f = data("clusters.json");
  const auto wide = lecam("ib " + f + " --latent 6");
  ASSERT_EQ(wide.code, 0);
  EXPECT_LE(wide.doc()["feature_gap"].get<double>(), 1e-9);
  EXPECT_TRUE(wide.doc()["trace_non_increasing"].get<bool>());

  const auto squeezed = lecam("ib " + f + " --latent 3 --beta 1e6");
  ASSERT_EQ(squeezed.code, 0);
  EXPECT_LE(squeezed.doc()["mutual_information_bits"].get<double>(), 1e-3);
  // No information kept: the gap is the full information gap.
  EXPECT_NEAR(squeezed.doc()["feature_gap"].get<double>(), squeezed.doc()["information_gap"].get<double>(), 1e-6);
  // Centroids are Z -> Theta: one row per theta, one column per latent.
  const auto c = squeezed.doc()["centroids"]["matrix"];
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].size(), 3u);
}

TEST(Cli, VerifySuites) {
  const auto tri = lecam("verify --suite triangle --trials 100 --seed 7");
  ASSERT_EQ(tri.code, 0);
  EXPECT_EQ(tri.doc()["suites"][0]["passed"].get<int>(), 100);
  const auto rnd = lecam("verify --suite randomization --trials 200");
  ASSERT_EQ(rnd.code, 0);
  EXPECT_EQ(rnd.doc()["suites"][0]["passed"].get<int>(), 200);
}

TEST(Cli, VerifyAllIsByteIdentical) {
  const auto a = lecam("verify --suite all --trials 20 --seed 99");
  const auto b = lecam("verify --suite all --trials 20 --seed 99");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(a.doc()["ok"].get<bool>());
  EXPECT_NE(a.out, lecam("verify --suite all --trials 20 --seed 100").out);
}

}  // namespace
