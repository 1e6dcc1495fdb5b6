#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>
#include <vector>

#include "cci/svg_plot.hpp"

namespace {

using namespace cci;

PredictionRow row(double p, double lo, double hi, Outcome o = Outcome::kUti, int label = 1) {
  PredictionRow r;
  r.participant_id = "P01";
  r.date = *parse_date("2024-01-03");
  r.p_hat = p;
  r.interval = {lo, hi};
  r.outcome = o;
  r.label = label;
  return r;
}

double attr(const std::string& element, const std::string& name) {
  std::smatch m;
  const std::regex re(" " + name + "=\"([-0-9.]+)\"");
  if (!std::regex_search(element, m, re)) return -1.0;
  return std::stod(m[1]);
}

std::vector<std::string> elements(const std::string& svg, const std::string& cls) {
  std::vector<std::string> out;
  const std::regex re("<[a-z]+ class=\"" + cls + "\"[^>]*/>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

// Tag balance check: every open tag is closed in order.
bool well_formed(const std::string& svg) {
  std::vector<std::string> stack;
  const std::regex tag("<(/?)([a-zA-Z?][a-zA-Z0-9]*)[^>]*?(/?)>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string name = m[2];
    if (name == "?xml" || m[3] == "/") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

double axis_fraction(double x) { return (x - 10.0) / 380.0; }

TEST(RenderIntervalSvg, BandAndTickCoordinates) {
  const auto svg = render_interval_svg(row(0.8, 0.6126, 0.8774));
  auto bands = elements(svg, "band");
  ASSERT_EQ(bands.size(), 1u);
  const double x = attr(bands[0], "x"), w = attr(bands[0], "width");
  EXPECT_NEAR(axis_fraction(x), 0.6126, 1e-4);
  EXPECT_NEAR(axis_fraction(x + w), 0.8774, 1e-4);
  EXPECT_NE(bands[0].find("#9467bd"), std::string::npos);
  auto ticks = elements(svg, "tick");
  ASSERT_EQ(ticks.size(), 1u);
  EXPECT_NEAR(axis_fraction(attr(ticks[0], "x1")), 0.8, 1e-4);
  EXPECT_NE(ticks[0].find("#1f77b4"), std::string::npos);
  EXPECT_NE(svg.find("width=\"400\" height=\"60\""), std::string::npos);
}

TEST(RenderIntervalSvg, ClassRegions) {
  const auto svg = render_interval_svg(row(0.5, 0.0, 1.0));
  auto neg = elements(svg, "negative"), pos = elements(svg, "positive");
  ASSERT_EQ(neg.size(), 1u);
  ASSERT_EQ(pos.size(), 1u);
  EXPECT_NE(neg[0].find("#2ca02c"), std::string::npos);
  EXPECT_NE(pos[0].find("#d62728"), std::string::npos);
  EXPECT_NEAR(axis_fraction(attr(neg[0], "x")), 0.0, 1e-9);
  EXPECT_NEAR(axis_fraction(attr(neg[0], "x") + attr(neg[0], "width")), 0.5, 1e-9);
  EXPECT_NEAR(axis_fraction(attr(pos[0], "x") + attr(pos[0], "width")), 1.0, 1e-9);
  // full interval covers the whole axis
  auto band = elements(svg, "band")[0];
  EXPECT_NEAR(axis_fraction(attr(band, "x")), 0.0, 1e-9);
  EXPECT_NEAR(attr(band, "width"), 380.0, 1e-9);
}

TEST(RenderIntervalSvg, DeterministicAndWellFormed) {
  auto r = row(0.3, 0.1226, 0.3874, Outcome::kNoUti, 0);
  r.participant_id = "A&B";
  const auto a = render_interval_svg(r), b = render_interval_svg(r);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(well_formed(a));
  EXPECT_NE(a.find("A&amp;B"), std::string::npos);
}

TEST(RenderStripSvg, OneBandPerRow) {
  std::vector<PredictionRow> rows = {row(0.8, 0.6, 0.9), row(0.2, 0.1, 0.4, Outcome::kNoUti, 0),
                                     row(0.5, 0.3, 0.8, Outcome::kAbstain)};
  const auto svg = render_strip_svg(rows);
  EXPECT_EQ(elements(svg, "band").size(), 3u);
  EXPECT_EQ(elements(svg, "tick").size(), 3u);
  EXPECT_NE(svg.find("height=\"180\""), std::string::npos);
  EXPECT_TRUE(well_formed(svg));
}

TEST(PredictionsCsv, RoundTrip) {
  std::vector<PredictionRow> rows = {row(0.8, 0.612600, 0.877400), row(0.25, 0.0, 1.0, Outcome::kAbstain, 0)};
  std::ostringstream out;
  write_predictions_csv(out, rows);
  std::istringstream in(out.str());
  auto back = read_predictions_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].participant_id, "P01");
  EXPECT_DOUBLE_EQ(back[0].interval.lo, 0.6126);
  EXPECT_EQ(back[1].outcome, Outcome::kAbstain);
  EXPECT_EQ(back[1].label, 0);
}

TEST(PredictionsCsv, MalformedRowsListLineNumbers) {
  std::istringstream in(std::string(kPredictionsHeader) +
                        "\n"
                        "P01,2024-01-03,0.8,0.6,0.9,UTI,1\n"
                        "P01,2024-01-04,1.8,0.6,0.9,UTI,1\n"
                        "P01,2024-01-05,0.8,0.9,0.6,UTI,1\n"
                        "P01,2024-01-06,0.8,0.6,0.9,UTI\n");
  try {
    read_predictions_csv(in);
    FAIL() << "expected a format error";
  } catch (const PredictionsFormatError& e) {
    EXPECT_EQ(e.bad_lines(), (std::vector<std::size_t>{3, 4, 5}));
  }
}

TEST(WriteIntervalPlots, FilesPerRowPlusStrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cci_svg_test";
  std::filesystem::remove_all(dir);
  std::vector<PredictionRow> rows = {row(0.8, 0.6, 0.9), row(0.2, 0.1, 0.4, Outcome::kNoUti, 0)};
  auto paths = write_interval_plots(rows, dir, "run00");
  ASSERT_EQ(paths.size(), 3u);
  EXPECT_EQ(paths[0].filename(), "run00_000.svg");
  EXPECT_EQ(paths[2].filename(), "run00_strip.svg");
  std::ifstream f(paths[0]);
  std::stringstream s;
  s << f.rdbuf();
  EXPECT_EQ(s.str(), render_interval_svg(rows[0]));
  std::filesystem::remove_all(dir);
}

}  // namespace
