#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "obflip/dataset.hpp"

using namespace obflip;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "obflip_test_dataset";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << body;
  return path;
}

IngestionSpec spec_for(const std::filesystem::path& path) {
  IngestionSpec s;
  s.path = path;
  s.roles = {"y", "g", {"x"}, "a", "b", {"", "NA"}};
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST(ParseCsv, QuotedFieldsAndCrlf) {
  std::istringstream in("name,value\r\n\"a, b\",1\r\n\"say \"\"hi\"\"\",2\r\n\"multi\nline\",3\n");
  const auto ds = parse_csv(in);
  ASSERT_EQ(ds.columns.size(), 2u);
  ASSERT_EQ(ds.rows(), 3u);
  EXPECT_EQ(ds.cells[0][0], "a, b");
  EXPECT_EQ(ds.cells[0][1], "say \"hi\"");
  EXPECT_EQ(ds.cells[0][2], "multi\nline");
  EXPECT_EQ(ds.cells[1][2], "3");
}

TEST(ParseCsv, AlternativeDelimiter) {
  std::istringstream in("a;b\n1;2\n");
  const auto ds = parse_csv(in, ';');
  EXPECT_EQ(ds.column("b")[0], "2");
}

TEST(ParseCsv, RaggedRowRejected) {
  std::istringstream in("a,b\n1,2,3\n");
  EXPECT_THROW(parse_csv(in), Error);
}

TEST(CsvEscape, RoundTrip) {
  for (std::string s : {"plain", "with,comma", "with \"quote\"", "line\nbreak"}) {
    std::istringstream in("h\n" + csv_escape(s) + "\n");
    EXPECT_EQ(parse_csv(in).cells[0][0], s);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double x : {0.1, -2.4, 1e-300, 123456789.125, 1.0 / 3.0}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(ParseNumber, NaAndGarbage) {
  const std::vector<std::string> na{"", "NA"};
  EXPECT_EQ(parse_number("2.5", na, "t"), 2.5);
  EXPECT_FALSE(parse_number("NA", na, "t").has_value());
  EXPECT_FALSE(parse_number("", na, "t").has_value());
  EXPECT_EQ(code_of([&] { parse_number("abc", na, "t"); }), ErrorCode::NonFiniteValue);
}

TEST(Ingest, ListwiseDeletionOfMissingCovariate) {
  const auto path = write_temp("five.csv", "g,x,y\na,1,2\na,2,NA\nb,3,4\nb,NA,5\na,4,6\nb,5,7\n");
  // Rows 2 and 4 have a missing value.
  const auto r = ingest(spec_for(path));
  EXPECT_EQ(r.log.dropped_missing, 2u);
  EXPECT_EQ(r.h.rows() + r.k.rows(), 4);

  const auto path5 = write_temp("five_one_na.csv", "g,x,y\na,1,2\na,2,3\nb,NA,4\nb,4,5\na,5,6\n");
  const auto r5 = ingest(spec_for(path5));
  EXPECT_EQ(r5.log.rows_read, 5u);
  EXPECT_EQ(r5.log.dropped_missing, 1u);
  EXPECT_EQ(r5.h.rows() + r5.k.rows(), 4);
  EXPECT_EQ(r5.log.missing_by_column.at("x"), 1u);
}

TEST(Ingest, UnmappedGroupValuesCounted) {
  const auto path = write_temp("three.csv", "g,x,y\na,1,2\nb,2,3\nc,3,4\nc,4,5\na,5,6\n");
  const auto r = ingest(spec_for(path));
  EXPECT_EQ(r.log.dropped_unmapped, 2u);
  EXPECT_EQ(r.log.rows_h, 2u);
  EXPECT_EQ(r.log.rows_k, 1u);
  EXPECT_EQ(r.h.covariates(1, 0), 5.0);
}

TEST(Ingest, HeaderlessFileIsMissingColumn) {
  const auto path = write_temp("noheader.csv", "a,1,2\nb,2,3\n");
  EXPECT_EQ(code_of([&] { ingest(spec_for(path)); }), ErrorCode::MissingColumn);
}

TEST(Ingest, Errors) {
  EXPECT_EQ(code_of([&] { ingest(spec_for("/nonexistent/file.csv")); }), ErrorCode::FileNotFound);
  const auto only_a = write_temp("only_a.csv", "g,x,y\na,1,2\na,2,3\n");
  EXPECT_EQ(code_of([&] { ingest(spec_for(only_a)); }), ErrorCode::FewerThanTwoGroups);
  const auto all_na = write_temp("all_na.csv", "g,x,y\na,NA,2\nb,2,NA\n");
  EXPECT_EQ(code_of([&] { ingest(spec_for(all_na)); }), ErrorCode::AllRowsDropped);
  auto same = spec_for(only_a);
  same.roles.k_value = "a";
  EXPECT_EQ(code_of([&] { ingest(same); }), ErrorCode::FewerThanTwoGroups);
}

TEST(WriteSamplesCsv, RoundTripsThroughIngest) {
  GroupSample h{Matrix(2, 1), Vector(2), Group::H}, k{Matrix(2, 1), Vector(2), Group::K};
  h.covariates << 0.1, 0.2;
  h.outcome << 1.0 / 3.0, 2;
  k.covariates << 3, 4;
  k.outcome << -5, 6e-7;
  std::ostringstream out;
  write_samples_csv(out, h, k, {"x"}, "y", "g", "a", "b");
  const auto path = write_temp("roundtrip.csv", out.str());
  const auto r = ingest(spec_for(path));
  EXPECT_EQ(r.h.covariates, h.covariates);
  EXPECT_EQ(r.h.outcome, h.outcome);
  EXPECT_EQ(r.k.outcome, k.outcome);
}
