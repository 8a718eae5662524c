#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "synlearn/data.hpp"
#include "synlearn/rng.hpp"

using namespace synlearn;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("derive_seed is deterministic and injective on the grid") {
  const SeedSpec spec{42};
  CHECK(derive_seed(spec, "fit", 3, 1) == derive_seed(spec, "fit", 3, 1));
  CHECK(derive_seed(spec, "fit", 0, 0) != derive_seed(spec, "fit", 0, 1));
  CHECK(derive_seed(spec, "fit", 0, 0) != derive_seed(spec, "fit", 1, 0));
  CHECK(derive_seed(spec, "fit", 0, 0) != derive_seed(spec, "eval", 0, 0));

  // exhaustive enumeration over a 10^4-triple grid: no collisions
  std::set<std::uint64_t> seen;
  for (int purpose = 0; purpose < 4; ++purpose) {
    for (std::uint64_t repeat = 0; repeat < 50; ++repeat) {
      for (std::uint64_t chain = 0; chain < 50; ++chain) {
        seen.insert(derive_seed(spec, "purpose-" + std::to_string(purpose), repeat, chain));
      }
    }
  }
  CHECK(seen.size() == 4u * 50u * 50u);
}

TEST_CASE("derive_seed depends on the master seed") {
  CHECK(derive_seed(SeedSpec{1}, "x", 0, 0) != derive_seed(SeedSpec{2}, "x", 0, 0));
}

TEST_CASE("rng streams are reproducible") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.normal() == b.normal());
    CHECK(a.laplace(2.0) == b.laplace(2.0));
  }
}

TEST_CASE("rng uniform01 stays inside the open interval") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal_quantile inverts normal_cdf") {
  for (double p : {1e-10, 1e-4, 0.025, 0.31, 0.5, 0.77, 0.975, 1.0 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
  }
}

TEST_CASE("gaussian csv round trip") {
  const auto path = temp_file("synlearn_core_gaussian.csv");
  Dataset d = Dataset::from_values({0.5, -1.2, 3.14159265358979312, 1e-17});
  write_csv(d, path);
  const Dataset back = load_csv(path, Task::Gaussian);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].value == d[i].value);  // 17 significant digits round-trip
  }
  std::filesystem::remove(path);
}

TEST_CASE("gaussian csv parses plain files") {
  const auto path = temp_file("synlearn_core_plain.csv");
  std::ofstream(path) << "value\n0.5\n-1.2\n";
  const Dataset d = load_csv(path, Task::Gaussian);
  REQUIRE(d.size() == 2);
  CHECK(d[0].value == 0.5);
  CHECK(d[1].value == -1.2);
  CHECK(d.task() == Task::Gaussian);
  std::filesystem::remove(path);
}

TEST_CASE("logistic csv: d=3 features plus label") {
  const auto path = temp_file("synlearn_core_logistic.csv");
  std::ofstream(path) << "f1,f2,f3,label\n0.1,0.2,0.3,1\n-1,0,2.5,0\n";
  const Dataset d = load_csv(path, Task::Logistic);
  REQUIRE(d.size() == 2);
  CHECK(d.feature_dim() == 3);
  CHECK(d[0].label == 1);
  CHECK(d[1].features[2] == 2.5);
  std::filesystem::remove(path);
}

TEST_CASE("logistic csv round trip") {
  const auto path = temp_file("synlearn_core_logistic_rt.csv");
  Dataset d(Task::Logistic);
  d.push_back(Observation::labelled({0.25, -3.75}, 1));
  d.push_back(Observation::labelled({1.0 / 3.0, 2.0}, 0));
  write_csv(d, path);
  const Dataset back = load_csv(path, Task::Logistic);
  REQUIRE(back.size() == 2);
  CHECK(back[1].features[0] == d[1].features[0]);
  CHECK(back[0].label == 1);
  std::filesystem::remove(path);
}

TEST_CASE("csv errors") {
  CHECK_THROWS(load_csv("/nonexistent/file.csv", Task::Gaussian));

  const auto bad_label = temp_file("synlearn_core_badlabel.csv");
  std::ofstream(bad_label) << "f1,label\n0.1,2\n";
  CHECK_THROWS(load_csv(bad_label, Task::Logistic));
  std::filesystem::remove(bad_label);

  const auto bad_cell = temp_file("synlearn_core_badcell.csv");
  std::ofstream(bad_cell) << "value\nabc\n";
  CHECK_THROWS(load_csv(bad_cell, Task::Gaussian));
  std::filesystem::remove(bad_cell);

  const auto ragged = temp_file("synlearn_core_ragged.csv");
  std::ofstream(ragged) << "f1,f2,label\n0.1,0.2,1\n0.3,0\n";
  CHECK_THROWS(load_csv(ragged, Task::Logistic));
  std::filesystem::remove(ragged);

  const auto no_label = temp_file("synlearn_core_nolabel.csv");
  std::ofstream(no_label) << "f1,f2\n0.1,0.2\n";
  CHECK_THROWS(load_csv(no_label, Task::Logistic));
  std::filesystem::remove(no_label);
}

TEST_CASE("dataset invariants") {
  Dataset d(Task::Logistic);
  d.push_back(Observation::labelled({1.0, 2.0}, 0));
  CHECK_THROWS(d.push_back(Observation::labelled({1.0}, 0)));       // width change
  CHECK_THROWS(d.push_back(Observation::labelled({1.0, 2.0}, 2)));  // bad label

  Dataset empty(Task::Gaussian);
  CHECK(empty.empty());  // n_L = 0 is legal
}

TEST_CASE("criterion orientations") {
  CHECK(orientation_of(CriterionKind::Auroc) == Orientation::HigherBetter);
  CHECK(orientation_of(CriterionKind::Kld) == Orientation::LowerBetter);
  CHECK(orientation_of(CriterionKind::LogScore) == Orientation::LowerBetter);
  CHECK(orientation_of(CriterionKind::Wasserstein1) == Orientation::LowerBetter);
  CHECK(criterion_from_string("kld") == CriterionKind::Kld);
  CHECK(to_string(CriterionKind::Wasserstein1) == "wasserstein1");
}
