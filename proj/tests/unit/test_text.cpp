#include <random>
#include <string>

#include <gtest/gtest.h>

#include "factlab/text.hpp"

using namespace factlab::text;

TEST(Text, TrimAndBlank) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_TRUE(is_blank(" \t\n"));
  EXPECT_FALSE(is_blank(" x "));
}

TEST(Text, TokenizeLowercasesAndSplitsOnPunctuation) {
  auto t = tokenize("Vaccine-efficacy, 95%! CDC");
  std::vector<std::string> want = {"vaccine", "efficacy", "95", "cdc"};
  EXPECT_EQ(t, want);
}

TEST(Text, TokenizeKeepsNonAsciiWords) {
  auto t = tokenize("Café naïve");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], "café");
}

TEST(Text, Jaccard) {
  EXPECT_DOUBLE_EQ(jaccard("a b c", "c b a"), 1.0);
  EXPECT_DOUBLE_EQ(jaccard("a b", "b c"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard("", ""), 0.0);
}

TEST(Text, StripMarkupCollapsesSpace) {
  EXPECT_EQ(strip_markup("<p>Hello  world</p>"), "Hello world");
  EXPECT_EQ(strip_markup("<script>var x = '<b>';</script>Body &amp; soul"), "Body & soul");
  EXPECT_EQ(strip_markup("a<!-- hidden <p> -->b"), "a b");
  EXPECT_EQ(strip_markup("1 < 2 &lt;b&gt;"), "1 &lt; 2 &lt;b&gt;");
}

TEST(Text, TruncateAtWord) {
  EXPECT_EQ(truncate_at_word("alpha beta gamma", 12), "alpha beta");
  EXPECT_EQ(truncate_at_word("alpha", 10), "alpha");
  EXPECT_EQ(truncate_at_word("abcdefgh", 3), "abc");
  // Never splits a multi-byte sequence.
  auto cut = truncate_at_word("ééééé", 3);
  EXPECT_EQ(cut, "é");
}

TEST(Text, CodepointOffsets) {
  std::string s = "a€b";
  EXPECT_EQ(codepoint_length(s), 3u);
  EXPECT_EQ(codepoint_to_byte(s, 2), 4u);
  EXPECT_EQ(codepoint_to_byte(s, 3), 5u);
  EXPECT_EQ(codepoint_to_byte(s, 4), std::string::npos);
}

TEST(Text, CsvQuotedFieldsAndLineNumbers) {
  auto rows = parse_csv("a,b\n\"x, y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].fields[0], "x, y");
  EXPECT_EQ(rows[1].fields[1], "say \"hi\"");
  EXPECT_EQ(rows[2].fields[0], "multi\nline");
  EXPECT_EQ(rows[2].line, 3u);
}

// Random fragments mixing tags, entities, comments and text: output is
// never longer than the cap and never carries a tag delimiter.
TEST(TextProperty, StripMarkupFuzz) {
  std::mt19937 rng(7);
  const std::vector<std::string> pieces = {"<p>", "</p>", "<div class=\"x\">", "<br/>", "<script>x<y</script>",
                                           "<style>.a{}</style>", "<!-- c -->", "&amp;", "&lt;", "&gt;",
                                           "&quot;", "text", " ", "\n", "<", ">", "a<b", "<!doctype html>",
                                           "é", "<a href='u'>link</a>", "&#39;", "<unterminated"};
  for (int n = 0; n < 2000; ++n) {
    std::string html;
    int len = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < len; ++i) html += pieces[rng() % pieces.size()];
    auto out = strip_markup(html);
    ASSERT_EQ(out.find('<'), std::string::npos) << html;
    ASSERT_EQ(out.find('>'), std::string::npos) << html;
    std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    auto cut = truncate_at_word(out, cap);
    ASSERT_LE(cut.size(), cap);
  }
}
