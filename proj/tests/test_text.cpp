#include <gtest/gtest.h>

#include <stdexcept>

#include "cloze/text.hpp"

using namespace cloze;

TEST(Text, JoinAndStyles) {
  EXPECT_EQ(join_and({}, ListStyle::kPlain), "");
  EXPECT_EQ(join_and({"a"}, ListStyle::kSerialComma), "a");
  EXPECT_EQ(join_and({"a", "b"}, ListStyle::kPlain), "a and b");
  EXPECT_EQ(join_and({"a", "b"}, ListStyle::kSerialComma), "a, and b");
  // Three or more always take the serial comma.
  EXPECT_EQ(join_and({"a", "b", "c"}, ListStyle::kPlain), "a, b, and c");
  EXPECT_EQ(join_and({"a", "b", "c", "d"}, ListStyle::kSerialComma), "a, b, c, and d");
}

TEST(Text, FillReplacesEverySlot) {
  EXPECT_EQ(fill("{entity} lives in {background}; {entity}", {{"entity", "Rowan"}, {"background", "Chile"}}),
            "Rowan lives in Chile; Rowan");
  EXPECT_EQ(fill("no slots", {}), "no slots");
  EXPECT_THROW(fill("{missing}", {}), std::invalid_argument);
}

TEST(Text, SlotsInFirstAppearanceOrder) {
  EXPECT_EQ(slots_of("{b} {a} {b}"), (std::vector<std::string>{"b", "a"}));
  EXPECT_TRUE(slots_of("plain").empty());
}

TEST(Text, WordsTrimPunctuationButKeepApostrophesAndBlank) {
  EXPECT_EQ(words_of("Sebastian lives in France. The capital of Sebastian's country is ___"),
            (std::vector<std::string>{"Sebastian", "lives", "in", "France", "The", "capital", "of",
                                      "Sebastian's", "country", "is", "___"}));
  EXPECT_EQ(words_of("  a,  b , ; c"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Text, WholePhraseCounting) {
  EXPECT_EQ(count_whole_phrase("the Tower of Pisa and the Tower", "Tower"), 2u);
  EXPECT_EQ(count_whole_phrase("the Tower of Pisa and the Tower", "Tower of Pisa"), 1u);
  EXPECT_EQ(count_whole_phrase("Parisian food", "Paris"), 0u);
  EXPECT_EQ(count_whole_phrase("x", ""), 0u);
}

TEST(Text, CountOccurrencesNonOverlapping) {
  EXPECT_EQ(count_occurrences("______", "___"), 2u);
  EXPECT_EQ(count_occurrences("abc", ""), 0u);
}

TEST(Text, Articles) {
  const ArticleTable plain;
  EXPECT_EQ(plain.article_for("florist"), "a");
  EXPECT_EQ(plain.article_for("optician"), "an");
  EXPECT_EQ(plain.article_for("Engineer"), "an");
  const ArticleTable custom({{"hour", "an"}, {"unicorn", "a"}});
  EXPECT_EQ(custom.article_for("Hour"), "an");
  EXPECT_EQ(custom.article_for("unicorn"), "a");
}
