// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include <gtest/gtest.h>

#include "aiql/predicate.hpp"

namespace aiql {
namespace {

TEST(LikeMatch, PercentIsTheOnlyWildcard) {
  EXPECT_TRUE(like_match("info_stealer.exe", "%info_stealer%"));
  EXPECT_TRUE(like_match("backup1.dmp", "%dmp"));
  EXPECT_TRUE(like_match("backup1.dmp", "backup1.dmp"));
  EXPECT_TRUE(like_match("", "%"));
  EXPECT_TRUE(like_match("abc", "a%%c"));
  EXPECT_FALSE(like_match("abc", "a_c"));
  EXPECT_TRUE(like_match("a_c", "a_c"));
  EXPECT_FALSE(like_match("Backup1.dmp", "backup%"));
  EXPECT_TRUE(like_match("aaab", "%ab"));
  EXPECT_FALSE(like_match("aaab", "%ac"));
}

TEST(CompareValues, NumericAndText) {
  EXPECT_TRUE(compare_values(std::int64_t{10}, Comparator::Gt, std::int64_t{9}));
  EXPECT_TRUE(compare_values(std::string("10"), Comparator::Lt, std::string("9")));
  EXPECT_TRUE(compare_values(std::int64_t{42}, Comparator::Eq, std::string("42")));
  EXPECT_TRUE(compare_values(std::int64_t{4242}, Comparator::Like, std::string("42%")));
}

TEST(Predicate, MissingAttributeNeverMatches) {
  Entity e{1, 1, EntityKind::Process, {{"exe_name", std::string("a.exe")}}};
  EXPECT_FALSE(evaluate(Atom{"user", Comparator::Ne, std::string("root")}, e));
  EXPECT_TRUE(evaluate(Atom{"exe_name", Comparator::Ne, std::string("b.exe")}, e));
}

TEST(Predicate, ConnectivesFlatten) {
  auto a = Predicate::of({"name", Comparator::Eq, std::string("a")});
  auto b = Predicate::of({"name", Comparator::Eq, std::string("b")});
  auto c = Predicate::of({"name", Comparator::Eq, std::string("c")});
  auto nested = Predicate::all_of({a, Predicate::all_of({b, c})});
  EXPECT_EQ(nested.children.size(), 3u);
  EXPECT_EQ(Predicate::all_of({Predicate::always(), a}), a);
  EXPECT_TRUE(Predicate::any_of({a, Predicate::always()}).is_true());
}

TEST(Predicate, SourceRendering) {
  auto p = Predicate::all_of({Predicate::of({"pid", Comparator::Ge, std::int64_t{4}}),
                              Predicate::any_of({Predicate::of({"exe_name", Comparator::Like, std::string("%a%")}),
                                                 Predicate::of({"user", Comparator::Eq, std::string("x\"y")})})});
  EXPECT_EQ(to_source(p), R"(pid >= 4 && (exe_name like "%a%" || user = "x\"y"))");
}

}  // namespace
}  // namespace aiql
