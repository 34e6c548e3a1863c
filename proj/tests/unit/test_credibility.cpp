#include <random>

#include <gtest/gtest.h>

#include "factlab/credibility.hpp"
#include "factlab/errors.hpp"
#include "support.hpp"

using namespace factlab;

namespace {

ReliabilityDataset ds(std::initializer_list<std::pair<const char*, CredibilityTier>> rows) {
  ReliabilityDataset d;
  d.version = "test";
  for (auto& [dom, tier] : rows) d.entries[dom] = {tier, std::nullopt};
  return d;
}

}  // namespace

TEST(ReliabilityCsv, LoadsAndRejects) {
  auto d = parse_reliability_csv("domain,tier,notes\ncdc.gov,high,agency\nexample.org,medium,\nspam.net,low,x\n", "v");
  EXPECT_EQ(d.entries.size(), 3u);
  EXPECT_EQ(d.entries.at("example.org").tier, CredibilityTier::medium);
  EXPECT_FALSE(d.entries.at("example.org").notes);

  try {
    parse_reliability_csv("domain,tier,notes\ncdc.gov,high,\nx.org,trusted,\n", "v");
    FAIL() << "expected a parse error";
  } catch (const ParseError& ex) {
    std::string m = ex.what();
    EXPECT_NE(m.find("line 3"), std::string::npos) << m;
    EXPECT_NE(m.find("trusted"), std::string::npos) << m;
  }
  EXPECT_THROW(parse_reliability_csv("domain,tier,notes\nexample.org,high,\nexample.org,low,\n", "v"),
               DuplicateIdError);
  EXPECT_THROW(load_reliability_dataset("/nonexistent.csv"), IoError);
}

TEST(ReliabilityCsv, BundledSampleCoversThreeTiers) {
  auto d = load_reliability_dataset(factlab::testing::data_path("reliability_sample.csv"));
  std::map<CredibilityTier, int> counts;
  for (const auto& [dom, e] : d.entries) ++counts[e.tier];
  EXPECT_GE(d.entries.size(), 45u);
  EXPECT_GT(counts[CredibilityTier::high], 0);
  EXPECT_GT(counts[CredibilityTier::medium], 0);
  EXPECT_GT(counts[CredibilityTier::low], 0);
}

TEST(NormalizeDomain, Rules) {
  EXPECT_EQ(normalize_domain("https://WWW.CDC.gov/flu?x=1"), "cdc.gov");
  EXPECT_EQ(normalize_domain("http://news.example.co.uk/a"), "news.example.co.uk");
  EXPECT_EQ(normalize_domain("https://user:pw@Example.org:8443/p"), "example.org");
  EXPECT_THROW(normalize_domain("not a url"), ValidationError);
  EXPECT_THROW(normalize_domain("/relative/path"), ValidationError);
}

TEST(Assess, ExactSuffixBoundaryAndUnknown) {
  ScoreConfig sc;
  auto d = ds({{"cdc.gov", CredibilityTier::high}, {"nytimes.com", CredibilityTier::high}});
  auto exact = assess("https://www.cdc.gov/x", d, sc);
  EXPECT_EQ(exact.tier, CredibilityTier::high);
  EXPECT_DOUBLE_EQ(exact.score, 1.0);
  auto sub = assess("https://blog.nytimes.com/a", d, sc);
  EXPECT_EQ(sub.tier, CredibilityTier::high);
  EXPECT_EQ(sub.matched_domain, "nytimes.com");
  EXPECT_EQ(sub.domain, "blog.nytimes.com");
  auto boundary = assess("https://notcdc.gov/x", d, sc);
  EXPECT_EQ(boundary.tier, CredibilityTier::unknown);
  EXPECT_FALSE(boundary.matched_domain);
  auto unknown = assess("https://elsewhere.net/", d, sc);
  EXPECT_EQ(unknown.tier, CredibilityTier::unknown);
  EXPECT_DOUBLE_EQ(unknown.score, 0.4);
}

TEST(Assess, LongestSuffixWins) {
  auto d = ds({{"example.com", CredibilityTier::high}, {"blogs.example.com", CredibilityTier::low}});
  EXPECT_EQ(assess("https://a.blogs.example.com/", d, ScoreConfig{}).tier, CredibilityTier::low);
  EXPECT_EQ(assess("https://www.example.com/", d, ScoreConfig{}).tier, CredibilityTier::high);
}

// Random datasets and configs: the tier order always carries over to scores,
// and assess is a pure function of its inputs.
TEST(AssessProperty, TierOrderImpliesScoreOrder) {
  std::mt19937 rng(99);
  const CredibilityTier tiers[] = {CredibilityTier::high, CredibilityTier::medium, CredibilityTier::low};
  for (int round = 0; round < 500; ++round) {
    ReliabilityDataset d;
    int n = 3 + rng() % 20;
    for (int i = 0; i < n; ++i) d.entries["site" + std::to_string(i) + ".org"] = {tiers[i % 3], std::nullopt};
    ScoreConfig sc;
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::array<double, 3> s = {u(rng), u(rng), u(rng)};
    std::sort(s.begin(), s.end());
    if (s[0] == s[1] || s[1] == s[2]) continue;
    sc.tier_scores = {{CredibilityTier::high, s[2]},
                      {CredibilityTier::medium, s[1]},
                      {CredibilityTier::low, s[0]},
                      {CredibilityTier::unknown, u(rng)}};
    sc.validate();
    std::map<CredibilityTier, double> seen;
    for (int i = 0; i < n; ++i) {
      auto url = "https://www.site" + std::to_string(i) + ".org/p";
      auto a = assess(url, d, sc);
      ASSERT_EQ(a.tier, tiers[i % 3]);
      seen[a.tier] = a.score;
      auto again = assess(url, d, sc);
      ASSERT_EQ(again.score, a.score);
    }
    ASSERT_GT(seen[CredibilityTier::high], seen[CredibilityTier::medium]);
    ASSERT_GT(seen[CredibilityTier::medium], seen[CredibilityTier::low]);
  }
}
