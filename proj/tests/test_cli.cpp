#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "jmcert/cli.hpp"
#include "jmcert/io.hpp"

using namespace jmcert;
using io::Json;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "jmcert");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const std::string& name) { return std::string(JMCERT_SAMPLES_DIR) + "/" + name; }

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("jmcert_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name, const std::string& body = {}) const {
    const auto p = (path_ / name).string();
    if (!body.empty()) std::ofstream(p) << body;
    return p;
  }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Io, ParsesChannelForms) {
  const auto loss = io::parse_channel(Json::parse(R"({"class":"C_loss","tau":0.6})"));
  EXPECT_NEAR(loss.N()(0, 0), 0.4, 1e-15);
  const auto excess = io::parse_channel(Json::parse(R"({"tau":0.5,"epsilon":0.5})"));
  EXPECT_NEAR(excess.N()(1, 1), 1.5, 1e-15);
  const auto b1 = io::parse_channel(Json::parse(R"({"class":"B1"})"));
  EXPECT_EQ(b1.N()(1, 1), 1.0);
  const auto raw = io::parse_channel(
      Json::parse(R"({"T":[[0.5,0],[0,0.5]],"N":[[0.75,0],[0,0.75]]})"));
  EXPECT_EQ(raw.modes(), 1);
}

TEST(Io, ChannelDiagnosticsNameTheField) {
  auto message = [](const char* text) {
    try {
      io::parse_channel(Json::parse(text));
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"class":"C_loss","tau":"x"})").find("channel.tau"), std::string::npos);
  EXPECT_NE(message(R"({"class":"C_loss"})").find("channel.tau: missing"), std::string::npos);
  EXPECT_NE(message(R"({"class":"E"})").find("channel.class"), std::string::npos);
  EXPECT_NE(message(R"({"class":"C_loss","tau":1.5})").find("outside the class range"), std::string::npos);
  EXPECT_NE(message(R"({"T":[[2,0],[0,2]],"N":[[0,0],[0,0]]})").find("not completely positive"),
            std::string::npos);
  EXPECT_NE(message(R"({"T":[[1,0],[0]],"N":[[0,0],[0,0]]})").find("channel.T[1]"), std::string::npos);
}

TEST(Io, MeasurementDiagnostics) {
  EXPECT_THROW(io::parse_measurement_set(Json::parse("[]")), io::InputError);
  try {
    io::parse_measurement_set(Json::parse(R"([{"model":"realistic_pd"}])"));
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("measurements[0].p_dark"), std::string::npos);
  }
  try {
    io::parse_measurement_set(Json::parse(R"([{"model":"thermal_pd","nu":0.5}])"));
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("measurements[0]"), std::string::npos);
  }
}

TEST(Cli, CertifyGaussianUnderLoss) {
  TempDir dir;
  const auto ch = dir.file("ch.json", R"({"class":"C_loss","tau":0.4})");
  const auto ms = dir.file("ms.json", R"([{"model":"gaussian","sigma":[[1,0],[0,1]]}])");
  const Invocation r = invoke({"certify", "--channel", ch, "--measurements", ms});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["broken"].get<bool>());
  EXPECT_NEAR(j["s_min_channel"].get<double>(), -0.2, 1e-12);
  EXPECT_EQ(j.begin().key(), "broken");
}

TEST(Cli, CertifyIdentityIsNotBroken) {
  TempDir dir;
  const auto ch = dir.file("ch.json", R"({"class":"B2_Id"})");
  const Invocation r = invoke({"certify", "--channel", ch, "--measurements", sample("wigner_positive.json"),
                        "--fail-if-not-broken"});
  EXPECT_EQ(r.code, 3);
  const Json j = Json::parse(r.out);
  EXPECT_FALSE(j["broken"].get<bool>());
  EXPECT_NE(j["note"].get<std::string>().find("sufficient"), std::string::npos);
}

TEST(Cli, MalformedInputExitsTwo) {
  TempDir dir;
  const auto ch = dir.file("ch.json", R"({"class":"C_loss","tau":"x"})");
  const Invocation r = invoke({"certify", "--channel", ch, "--measurements", sample("pd_pair.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("channel.tau"), std::string::npos);

  const auto broken_json = dir.file("bad.json", "{\"class\": ");
  EXPECT_EQ(invoke({"smin", "--channel", broken_json}).code, 2);
  EXPECT_EQ(invoke({"smin", "--channel", dir.file("missing.json")}).code, 2);
  EXPECT_EQ(invoke({"smin"}).code, 2);
  EXPECT_EQ(invoke({"no-such-command"}).code, 2);
  EXPECT_EQ(invoke({"eb-check", "--tau", "abc"}).code, 2);
  EXPECT_EQ(invoke({"eb-check", "--tau", "1.5"}).code, 2);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir;
  const auto cfg = dir.file("cfg.json", R"({"channel":{"class":"C_loss","tau":0.7},
      "measurements":[{"model":"heterodyne"},{"model":"homodyne"}],"fail_if_not_broken":true})");
  EXPECT_EQ(invoke({"certify", "--config", cfg}).code, 3);
  const auto ch = dir.file("ch.json", R"({"class":"C_loss","tau":0.3})");
  EXPECT_EQ(invoke({"certify", "--config", cfg, "--channel", ch}).code, 0);
}

TEST(Cli, SminText) {
  const Invocation r = invoke({"smin", "--channel", sample("b1.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "s_min = 0.618033989\n");
}

TEST(Cli, Table1SectionsAndCsv) {
  TempDir dir;
  const auto csv = dir.file("t1.csv");
  const Invocation r = invoke({"table1", "--csv", csv});
  EXPECT_EQ(r.code, 0);
  for (const char* tag : {"[A1]", "[A2]", "[B1]", "[B2]", "[B2_Id]", "[C_loss]", "[C_amp]", "[D]"}) {
    EXPECT_NE(r.out.find(tag), std::string::npos) << tag;
  }
  const std::string body = slurp(csv);
  EXPECT_EQ(body.substr(0, body.find('\n')), "class,tau,nbar,s_min_eigen,s_min_closed,abs_diff");

  const Invocation b1 = invoke({"table1", "--class", "B1"});
  EXPECT_EQ(b1.code, 0);
  EXPECT_NE(b1.out.find("0.618"), std::string::npos);
  EXPECT_EQ(invoke({"table1", "--class", "Z9"}).code, 2);
}

TEST(Cli, PqdGridBoundaryZero) {
  TempDir dir;
  const auto out = dir.file("grid.csv");
  const Invocation r = invoke({"pqd-grid", "--model", sample("realistic_pd.json"), "--s", "-0.5",
                        "--half-width", "3", "--points", "51", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(out));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "z1,z2,outcome,value");
  double min_click = 1.0;
  std::string where;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find(",click,") == std::string::npos) continue;
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    if (v < min_click) {
      min_click = v;
      where = line.substr(0, line.find(",click,"));
    }
  }
  EXPECT_EQ(rows, 51 * 51 * 2);
  EXPECT_NEAR(min_click, 0.0, 1e-12);
  EXPECT_EQ(where, "0,0");
}

TEST(Cli, PqdGridRefusesDivergentOrdering) {
  EXPECT_EQ(invoke({"pqd-grid", "--model", sample("thermal_pd.json"), "--s", "3.5"}).code, 2);
  EXPECT_EQ(invoke({"pqd-grid", "--model", sample("thermal_pd.json"), "--s", "1.5", "--points", "5",
                    "--half-width", "1"})
                .code,
            0);
  EXPECT_EQ(invoke({"pqd-grid", "--model", sample("thermal_pd.json"), "--s", "0", "--points", "4"}).code,
            2);
}

TEST(Cli, PqdGridIsDeterministic) {
  const std::vector<std::string> args = {"pqd-grid", "--model", sample("thermal_pd.json"), "--s", "0.5",
                                         "--half-width", "2", "--points", "9"};
  EXPECT_EQ(invoke(args).out, invoke(args).out);
}

TEST(Cli, EbCheck) {
  const Invocation r = invoke({"eb-check", "--tau", "0.3", "--epsilon", "0.3"});
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["sufficient_condition_psd"].get<bool>());
  EXPECT_GE(j["tms_min_eigenvalue"].get<double>(), -1e-10);
  EXPECT_DOUBLE_EQ(j["scan_nu_range"][1].get<double>(), 10.0);
}

TEST(Cli, OracleValidateSingleItem) {
  const Invocation r = invoke({"oracle-validate", "--item", "eb-scan"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("PASS  eb-scan", 0), 0u);
  EXPECT_EQ(invoke({"oracle-validate", "--item", "bogus"}).code, 2);
  EXPECT_EQ(invoke({"oracle-validate", "--cutoff", "12", "--item", "trace-identity"}).code, 1);
}

TEST(Cli, SamplesParse) {
  for (const char* name : {"loss_half.json", "loss_07.json", "loss_excess.json", "b1.json",
                           "raw_two_mode.json"}) {
    EXPECT_NO_THROW(io::parse_channel(io::read_json_file(sample(name)))) << name;
  }
  for (const char* name : {"pd_pair.json", "wigner_positive.json", "product_pair.json"}) {
    EXPECT_NO_THROW(io::parse_measurement_set(io::read_json_file(sample(name)))) << name;
  }
}
