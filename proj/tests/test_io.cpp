#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geonum/io.hpp"

using namespace geonum;

TEST(Io, FormatNumberRoundTrips) {
  for (const double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.125, 10.947462220961647}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(20.0), "20");
}

TEST(Io, FormAndLatticeJsonRoundTrip) {
  const auto form = random_form(2, 1, 3);
  EXPECT_EQ(form_from_json(Json::parse(to_json(form).dump())).gram(), form.gram());
  const auto lattice = goldstein_mayer(4, 1009, 3);
  const auto back = lattice_from_json(Json::parse(to_json(lattice).dump()));
  EXPECT_EQ(back.basis(), lattice.basis());
  // Row-major layout.
  EXPECT_EQ(to_json(lattice)["basis"][1].get<double>(), lattice.basis()(0, 1));
}

TEST(Io, JsonValidation) {
  EXPECT_THROW(form_from_json(Json{{"dim", 3}, {"gram", {1, 2}}}), ValidationError);
  EXPECT_THROW(lattice_from_json(Json{{"basis", {1}}}), ValidationError);
  EXPECT_THROW(lattice_from_json(Json{{"dim", 2}, {"basis", {2, 0, 0, 2}}}), ValidationError);
}

TEST(Io, CsvSchemas) {
  std::ostringstream records;
  const std::vector<ExperimentRecord> rows{make_record(0.5, 3.0, 2.0, 7)};
  write_records_csv(records, rows);
  EXPECT_EQ(records.str(), "parameter,observed,reference,residual,seed\n0.5,3,2,1,7\n");
  std::ostringstream trials;
  const std::vector<TrialCount> counts{{0, 11, 4}, {1, 12, 0}};
  write_trials_csv(trials, counts);
  EXPECT_EQ(trials.str(), "trial_index,seed,count\n0,11,4\n1,12,0\n");
  std::ostringstream cq;
  CqEstimate est;
  est.rows.push_back(CqRow{10.0, 25.0, 0.5, 2.5, 0.0});
  write_cq_csv(cq, est);
  EXPECT_EQ(cq.str(), "T,volume,std_error,normalized\n10,25,0.5,2.5\n");
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "geonum_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), "second\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  std::filesystem::remove_all(dir);
}
