#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "jmcert/oracle.hpp"

using namespace jmcert;

namespace {

const std::vector<oracle::ItemResult>& battery_at_40() {
  static const auto results = oracle::run_battery({40, std::nullopt});
  return results;
}

}  // namespace

TEST(Oracle, DefaultBatteryPasses) {
  const auto& results = battery_at_40();
  EXPECT_EQ(results.size(), oracle::item_names().size());
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << " max_error=" << r.max_error << " tol=" << r.tolerance << " "
                          << r.failure;
    EXPECT_FALSE(r.reports.empty()) << r.name;
  }
}

TEST(Oracle, SingleItemFilter) {
  const auto results = oracle::run_battery({40, std::string("eb-scan")});
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].name, "eb-scan");
  EXPECT_THROW(oracle::run_battery({40, std::string("no-such-item")}), DomainError);
  EXPECT_THROW(oracle::run_battery({1, std::nullopt}), DomainError);
}

TEST(Oracle, UnderResolvedCutoffFailsInformatively) {
  std::map<std::string, oracle::ItemResult> by_name;
  for (const auto& item : oracle::battery_items()) {
    if (item.name == "trace-identity" || item.name == "closed-form" || item.name == "born-pairing") {
      by_name[item.name] = oracle::run_item(item, 12);
    }
  }
  for (const auto& [name, r] : by_name) {
    EXPECT_FALSE(r.passed) << name;
    // Either a numeric error above tolerance or the reason it could not run.
    EXPECT_TRUE(r.max_error > r.tolerance || !r.failure.empty()) << name;
  }
}

TEST(Oracle, CutoffConvergence) {
  // Items that are resolved at D = 30 stay resolved as the cutoff grows.
  const std::vector<std::string> stable = {"displacement", "trace-identity", "heterodyne-identity",
                                           "mother-measurement", "positivity-transfer"};
  for (const auto& item : oracle::battery_items()) {
    if (std::find(stable.begin(), stable.end(), item.name) == stable.end()) continue;
    for (int d : {30, 45, 60}) {
      const auto r = oracle::run_item(item, d);
      EXPECT_TRUE(r.passed) << item.name << " at D=" << d << " " << r.failure;
    }
  }
}
