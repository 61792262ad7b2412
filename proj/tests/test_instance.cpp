#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlhh/instance.hpp"
#include "test_util.hpp"

using namespace rlhh;

namespace {

std::string solomon_text(const std::string& rows) {
  return "T\n\nVEHICLE\nNUMBER     CAPACITY\n  3   50\n\nCUSTOMER\nCUST NO. XCOORD. YCOORD. DEMAND READY DUE SERVICE\n\n" + rows;
}

}  // namespace

TEST(Solomon, ParsesToyFixture) {
  const auto inst = load_solomon(fx::fixture("toy4.txt"));
  EXPECT_EQ(inst.name, "TOY4");
  EXPECT_EQ(inst.customers.size(), 4u);
  EXPECT_EQ(inst.capacity, 10);
  EXPECT_EQ(inst.depot.demand, 0);
  EXPECT_EQ(inst.depot.service, 0);
  EXPECT_EQ(inst.customers[1].ready, 30);
}

TEST(Solomon, R201MatchesFileHeaderAndRows) {
  const auto path = fx::solomon("r201");
  const auto inst = load_solomon(path);
  EXPECT_EQ(inst.customers.size(), 100u);
  // independent read of the header: the line after "NUMBER ... CAPACITY"
  std::ifstream in(path);
  std::string line;
  int number = 0;
  double capacity = 0;
  while (std::getline(in, line))
    if (line.find("NUMBER") != std::string::npos) {
      in >> number >> capacity;
      break;
    }
  EXPECT_EQ(inst.vehicle_count, number);
  EXPECT_EQ(inst.capacity, capacity);
  for (std::size_t i = 0; i < inst.customers.size(); ++i) EXPECT_EQ(inst.customers[i].id, static_cast<int>(i) + 1);
}

TEST(Solomon, RejectsReadyAfterDue) {
  std::istringstream in(solomon_text("0 0 0 0 0 100 0\n1 1 1 5 50 40 1\n"));
  try {
    parse_solomon(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 11);
  }
}

TEST(Solomon, RejectsMissingHeaderAndMalformedRows) {
  std::istringstream no_header("CUSTOMER\n0 0 0 0 0 100 0\n");
  EXPECT_THROW(parse_solomon(no_header), ParseError);
  std::istringstream bad_row(solomon_text("0 0 0 0 0 100 0\n1 1 x 5 0 40 1\n"));
  EXPECT_THROW(parse_solomon(bad_row), ParseError);
  std::istringstream heavy(solomon_text("0 0 0 0 0 100 0\n1 1 1 60 0 40 1\n"));
  EXPECT_THROW(parse_solomon(heavy), ParseError);
}

TEST(Truncate, PrefixAndErrors) {
  const auto inst = load_solomon(fx::solomon("r201"));
  EXPECT_EQ(truncate(inst, 100), inst);
  const auto t25 = truncate(inst, 25);
  ASSERT_EQ(t25.customers.size(), 25u);
  for (int i = 0; i < 25; ++i) EXPECT_EQ(t25.customers[static_cast<std::size_t>(i)], inst.customers[static_cast<std::size_t>(i)]);
  EXPECT_EQ(t25.depot, inst.depot);
  EXPECT_EQ(t25.capacity, inst.capacity);
  EXPECT_THROW(truncate(inst, 0), ArgumentError);
  EXPECT_THROW(truncate(inst, 101), ArgumentError);
  const auto t10 = truncate(inst, 10);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(t10.customers[static_cast<std::size_t>(i)], t25.customers[static_cast<std::size_t>(i)]);
}

TEST(Bdsp, GeneratorIsDeterministicAndBounded) {
  EXPECT_EQ(generate_bdsp(5, 42), generate_bdsp(5, 42));
  EXPECT_NE(generate_bdsp(5, 42), generate_bdsp(5, 43));
  const auto inst = generate_bdsp(2000, 7);
  for (const auto& t : inst.trips) {
    EXPECT_GE(t.duration(), 60);
    EXPECT_LE(t.duration(), 90);
    EXPECT_GE(t.start, 4 * 60);
    EXPECT_LT(t.start, 22 * 60);
  }
  EXPECT_THROW(generate_bdsp(0, 1), ArgumentError);
}

TEST(Bdsp, StartHourDistributionFitsTable) {
  const auto inst = generate_bdsp(100'000, 2024);
  std::array<int, 24> counts{};
  for (const auto& t : inst.trips) ++counts[static_cast<std::size_t>(t.start / 60)];
  EXPECT_NEAR(counts[8] / 1e5, 0.10, 0.01);
  double chi2 = 0;
  int cells = 0;
  for (int h = 0; h < 24; ++h) {
    const double p = kStartHourPercent[static_cast<std::size_t>(h)] / 100.0;
    if (p == 0) {
      EXPECT_EQ(counts[static_cast<std::size_t>(h)], 0);
      continue;
    }
    const double expected = p * 1e5;
    chi2 += (counts[static_cast<std::size_t>(h)] - expected) * (counts[static_cast<std::size_t>(h)] - expected) / expected;
    ++cells;
  }
  const boost::math::chi_squared dist(cells - 1);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(CanonicalFormat, RoundTripsBothKinds) {
  const auto dir = std::filesystem::temp_directory_path() / "rlhh_instance_rt";
  std::filesystem::create_directories(dir);
  const Instance b = generate_bdsp(40, 3);
  save_instance(b, dir / "b.bdsp.txt");
  EXPECT_EQ(load_instance(dir / "b.bdsp.txt"), b);
  VrptwInstance v = load_solomon(fx::solomon("rc101"));
  v.vehicle_fixed_cost = 12.5;
  v.customers[0].x = 0.1 + 0.2;  // not exactly representable in short decimal
  save_instance(Instance(v), dir / "v.vrptw.txt");
  EXPECT_EQ(load_instance(dir / "v.vrptw.txt"), Instance(v));
  EXPECT_EQ(load_any_instance(dir / "v.vrptw.txt"), Instance(v));
}

TEST(CanonicalFormat, RejectsUnknownVersionAndTruncation) {
  std::ostringstream out;
  write_instance(out, Instance(generate_bdsp(10, 1)));
  const std::string text = out.str();
  std::istringstream wrong("FORMAT v9\n" + text.substr(text.find('\n') + 1));
  EXPECT_THROW(read_instance(wrong), VersionError);
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_instance(cut), FormatError);
  try {
    std::istringstream cut2(text.substr(0, text.size() / 2));
    read_instance(cut2);
  } catch (const VersionError&) {
    FAIL() << "truncation must not be reported as a version error";
  } catch (const FormatError&) {
  }
}
