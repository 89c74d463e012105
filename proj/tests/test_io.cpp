#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "maqp/builtin.hpp"
#include "maqp/harness.hpp"
#include "maqp/io.hpp"
#include "test_util.hpp"

using namespace maqp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "maqp_test_io" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Json, BuiltinsRoundTripBitIdentical) {
  for (const std::string& name : builtin_names()) {
    const ProblemSpec s = builtin(name, BuiltinParams{0.1 + 1.0 / 3.0, 0.7, 1.3}).spec;
    const ProblemSpec back = io::problem_from_json(io::json::parse(io::problem_to_json(s).dump()));
    EXPECT_EQ(back, s) << name;
  }
}

TEST(Json, RandomSpecsWithSetsRoundTrip) {
  maqp::testing::Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    ProblemSpec s = maqp::testing::random_spec(rng);
    s.indicators[0] = BoxSet{Vec::Constant(s.blocks.size(0), -kInf), rng.vec(s.blocks.size(0))};
    s.indicators[1] = PolyhedronSet{rng.mat(2, s.blocks.size(1)), rng.vec(2)};
    const fs::path p = scratch("rt") / "spec.json";
    io::save_problem(s, p);
    EXPECT_EQ(io::load_problem(p), s);
  }
}

TEST(Json, LocomotionRoundTrip) {
  LocomotionSpec l = walking_2d(0.05);
  l.com_bounds = ComBounds{Vec3(-kInf, -1, 0.1), Vec3(kInf, 1, 0.5)};
  const LocomotionSpec back = io::locomotion_from_json(io::locomotion_to_json(l));
  EXPECT_EQ(compile(back).spec, compile(l).spec);
  EXPECT_EQ(back.com_bounds->lower, l.com_bounds->lower);
  EXPECT_THROW(io::locomotion_from_json(io::locomotion_to_json(l), "x", 0.01), ParseError);
}

TEST(Json, ParseErrorsCarryLineNumbers) {
  const fs::path d = scratch("parse");
  write(d / "bad.json", "{\n  \"blocks\": [1, 1],\n  \"f\": {\n    oops\n}\n");
  try {
    io::load_problem(d / "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  write(d / "missing.json", "{\"blocks\": [1]}\n");
  EXPECT_THROW(io::load_problem(d / "missing.json"), ParseError);
  EXPECT_THROW(io::load_problem(d / "does_not_exist.json"), Error);
}

TEST(Csv, WriteAndReadBack) {
  const ProblemSpec s = example22();
  SolverConfig cfg;
  cfg.max_iter = 30;
  const SolveReport r = solve(s, cfg, maqp::testing::Vec2(1, -1));
  const long double l_star = r.state.history.back().lagrangian_ext;
  const fs::path p = scratch("csv") / "h.csv";
  io::write_history_csv(p, r.state.history, l_star);
  const io::CsvTable t = io::read_csv(p);
  EXPECT_EQ(t.header, io::kHistoryColumns);
  ASSERT_EQ(t.column("k").size(), r.state.history.size());
  for (size_t k = 0; k < r.state.history.size(); ++k) {
    EXPECT_EQ(t.column("lagrangian")[k], r.state.history[k].lagrangian);
    EXPECT_EQ(t.column("primal_residual")[k], r.state.history[k].primal_residual);
    EXPECT_EQ(t.column("gap")[k],
              static_cast<double>(r.state.history[k].lagrangian_ext - l_star));
  }
  EXPECT_THROW(t.column("nope"), Error);
}

TEST(Csv, ParseErrorLineAndSpecialValues) {
  const fs::path d = scratch("csv_bad");
  write(d / "a.csv", "k,gap\n0,1\n1,abc\n");
  try {
    io::read_csv(d / "a.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  write(d / "b.csv", "k,gap\n0,1,2\n");
  EXPECT_THROW(io::read_csv(d / "b.csv"), ParseError);
  write(d / "c.csv", "k,gap\n0,inf\n1,4.9406564584124654e-324\n2,\n");
  const io::CsvTable t = io::read_csv(d / "c.csv");
  EXPECT_TRUE(std::isinf(t.column("gap")[0]));
  EXPECT_GT(t.column("gap")[1], 0.0);
  EXPECT_TRUE(std::isnan(t.column("gap")[2]));
}

TEST(FitReport, SyntheticColumns) {
  const fs::path d = scratch("fit");
  std::ostringstream geo, sub;
  geo << "k,gap\n";
  for (int k = 0; k < 40; ++k) geo << k << "," << io::format_double(std::pow(2.0, -k)) << "\n";
  sub << "k,gap\n";
  for (int k = 1; k <= 10000; ++k) sub << k - 1 << "," << io::format_double(1.0 / k) << "\n";
  write(d / "geo.csv", geo.str());
  write(d / "sub.csv", sub.str());
  write(d / "other.csv", "k,value\n0,1\n");

  const auto rows = fit_report({d / "geo.csv", d / "sub.csv", d / "other.csv"}, 1.0);
  ASSERT_EQ(rows.size(), 3u);
  ASSERT_TRUE(rows[0].fit);
  EXPECT_TRUE(rows[0].fit->linear());
  EXPECT_NEAR(rows[0].fit->contraction, 2.0, 1e-9);
  ASSERT_TRUE(rows[1].fit);
  EXPECT_FALSE(rows[1].fit->linear());
  EXPECT_FALSE(rows[2].fit);
  EXPECT_FALSE(rows[2].error.empty());

  const io::json j = fit_report_json(rows);
  EXPECT_EQ(j.size(), 3u);
  EXPECT_NE(fit_report_table(rows).find("geo.csv"), std::string::npos);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5e-324}) {
    EXPECT_EQ(std::strtod(io::format_double(v).c_str(), nullptr), v);
  }
}
