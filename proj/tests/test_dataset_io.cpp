#include <gtest/gtest.h>

#include <random>

#include "robcomp/dataset_io.hpp"
#include "robcomp/errors.hpp"

using namespace robcomp;

TEST(Parse, ScalarGroupsWithComments) {
  const auto f = parse_dataset("# income sample\na: 1 2 3\n\nb: 4 5 6  # trailing\r\nc:7 8 9\n");
  ASSERT_EQ(f.groups.size(), 3u);
  EXPECT_EQ(f.groups[1].id, "b");
  EXPECT_EQ(f.groups[1].scalars, (std::vector<double>{4, 5, 6}));
  EXPECT_EQ(f.space(), Space::Scalar);
  EXPECT_FALSE(f.has_outer_ids());
}

TEST(Parse, PointsAndOuterIds) {
  const auto f = parse_dataset("s1@tx: 1,2 -3.5,4e2\ns2@tx: 0,0 1,1\ns1@ca: 5,5 6,6\n");
  EXPECT_EQ(f.space(), Space::Plane);
  EXPECT_TRUE(f.has_outer_ids());
  EXPECT_EQ(f.groups[0].points[1], (Point2D{-3.5, 400}));
  EXPECT_EQ(f.groups[2].outer, "ca");
}

TEST(Parse, ErrorsCarryLineNumbers) {
  auto line_of = [](const char* text) {
    try {
      parse_dataset(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("a: 1 2\nb 3 4\n"), 2u);
  EXPECT_EQ(line_of("a: 1 2\n\nb: 3 x\n"), 3u);
  EXPECT_EQ(line_of("a: 1 2\nb: 1,2\n"), 2u);
  EXPECT_EQ(line_of("a: 1 2\na: 3\n"), 2u);
  EXPECT_EQ(line_of("a:\n"), 1u);
  EXPECT_EQ(line_of("a: nan\n"), 1u);
  EXPECT_EQ(line_of("a: 1,\n"), 1u);
  EXPECT_EQ(line_of("a@o: 1\nb: 2\n"), 2u);
  EXPECT_NE(line_of("# only a comment\n"), 0u);
}

TEST(RoundTrip, WriteThenReadIsIdentity) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    DatasetFile f;
    const bool planar = trial % 2;
    const bool outer = trial % 3 == 0;
    for (int g = 0; g < 1 + trial % 5; ++g) {
      GroupRecord r;
      r.id = "g" + std::to_string(g);
      if (outer) r.outer = "o" + std::to_string(g % 2);
      for (int i = 0; i < 1 + (trial + g) % 6; ++i) {
        if (planar) {
          r.points.push_back({d(rng), d(rng) * 1e-7});
        } else {
          r.scalars.push_back(trial == 4 ? 1e300 : d(rng));
        }
      }
      f.groups.push_back(r);
    }
    ASSERT_EQ(parse_dataset(write_dataset(f)), f);
  }
}

TEST(Hierarchy, DepthsFromOneFile) {
  const auto f = parse_dataset("a@x: 1 2\nb@y: 3 4\nc@x: 5 6\nd@y: 7 8\n");
  const auto d3 = to_hierarchical(f, 3);
  EXPECT_EQ(d3.outer_groups(), 2u);
  EXPECT_EQ(std::get<std::vector<double>>(d3.payload()), (std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8}));
  EXPECT_EQ(to_hierarchical(f, 1).size(), 8u);
  EXPECT_THROW(to_hierarchical(f, 2), ConfigError);
  const auto plain = parse_dataset("a: 1\nb: 2 3\n");
  EXPECT_EQ(to_hierarchical(plain, 2).layout().inner_sizes, (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(to_hierarchical(plain, 3), ConfigError);
}

TEST(Hierarchy, FromHierarchicalRoundTrip) {
  const auto data = HierarchicalDataset::three_level(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}, 2, 2, 2);
  const auto file = from_hierarchical(data);
  EXPECT_EQ(write_dataset(file), "g0@o0: 1 2\ng1@o0: 3 4\ng2@o1: 5 6\ng3@o1: 7 8\n");
  const auto back = to_hierarchical(parse_dataset(write_dataset(file)), 3);
  EXPECT_EQ(back.payload(), data.payload());
  EXPECT_EQ(back.layout().outer_counts, data.layout().outer_counts);
}
