#include <gtest/gtest.h>

#include <sstream>

#include "gclosure/io.hpp"

using namespace gclosure::io;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(1), "0000000000000001");
}

TEST(CsvTable, RowsEndWithHash) {
  CsvTable t({"name", "x", "n", "ok"}, "abc");
  t.row() << "first" << 0.1 << 3 << true;
  t.row() << std::string("second") << 2.5 << std::size_t{7} << false;
  std::ostringstream os;
  t.write(os);
  EXPECT_EQ(os.str(),
            "name,x,n,ok,config_hash\n"
            "first,0.10000000000000001,3,1,abc\n"
            "second,2.5,7,0,abc\n");
}

TEST(Svg, LineChartIsWellFormed) {
  std::ostringstream os;
  write_svg_lines(os, "decay", "j", "value", {{"a", {1, 2, 4}, {1.0, 0.5, 0.25}}, {"b", {1, 2}, {2, 2}}},
                  true);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(s, "<polyline"), 2u);
  EXPECT_EQ(count(s, "<circle"), 5u);
  EXPECT_EQ(s.find("nan"), std::string::npos);
}

TEST(Svg, HeatmapHasOneRectPerCell) {
  std::ostringstream os;
  write_svg_heatmap(os, "blocks", 2, 3, {0, 1, -1, 0.5, -0.5, 0});
  const std::string s = os.str();
  EXPECT_EQ(count(s, "<rect"), 7u);
  EXPECT_NE(s.find("rgb(255,0,0)"), std::string::npos);
  EXPECT_NE(s.find("rgb(0,0,255)"), std::string::npos);
}
