#include <gtest/gtest.h>

#include <sstream>

#include "flowgnn/config.hpp"
#include "flowgnn/error.hpp"

using flowgnn::ConfigError;
using flowgnn::KeyValues;

namespace {

KeyValues parse(const std::string& text) {
  std::istringstream in(text);
  return KeyValues::parse(in, "test");
}

}  // namespace

TEST(KeyValues, ParsesBothSeparatorsAndSkipsComments) {
  auto kv = parse("# comment\n\n a = 1 \nb: two words\nc=x=y\n");
  EXPECT_EQ(kv.get_int("a", 0), 1);
  EXPECT_EQ(*kv.get("b"), "two words");
  EXPECT_EQ(*kv.get("c"), "x=y");
  EXPECT_FALSE(kv.has("d"));
  EXPECT_EQ(kv.get_or("d", "fallback"), "fallback");
}

TEST(KeyValues, TypedAccessorsRejectMalformedValues) {
  auto kv = parse("n = 12x\nd = 0.5\nb = maybe\n");
  EXPECT_THROW(kv.get_int("n", 0), ConfigError);
  EXPECT_DOUBLE_EQ(kv.get_double("d", 0), 0.5);
  EXPECT_THROW(kv.get_bool("b", false), ConfigError);
  try {
    kv.get_int("n", 0);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'n'"), std::string::npos);
  }
}

TEST(KeyValues, ListsAndBooleans) {
  auto kv = parse("drop = a, b ,c\nflag = yes\noff = 0\n");
  EXPECT_EQ(kv.get_list("drop"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_FALSE(kv.get_bool("off", true));
  EXPECT_TRUE(kv.get_list("missing").empty());
}

TEST(KeyValues, LineWithoutSeparatorIsAnError) { EXPECT_THROW(parse("justtext\n"), ConfigError); }

TEST(KeyValues, RequireKnownNamesTheKey) {
  auto kv = parse("good = 1\nbad = 2\n");
  EXPECT_NO_THROW(kv.require_known({"good", "bad"}));
  try {
    kv.require_known({"good"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}
