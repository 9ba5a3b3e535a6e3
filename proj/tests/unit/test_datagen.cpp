#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "digmix/datagen.hpp"
#include "digmix/errors.hpp"

using namespace digmix;
namespace fs = std::filesystem;

namespace {

std::string write_tmp(const std::string& name, const std::string& body) {
  const auto dir = fs::temp_directory_path() / "digmix_datagen_test";
  fs::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path) << body;
  return path;
}

// Class-conditional moments of one generated component.
struct ClassMoments {
  std::size_t count = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

ClassMoments moments(const Dataset& ds, int k) {
  ClassMoments m;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((*ds.labels)[i] != k) continue;
    ++m.count;
    m.mean += ds.x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  m.mean /= static_cast<double>(m.count);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((*ds.labels)[i] != k) continue;
    Eigen::Vector2d r = ds.x.row(static_cast<Eigen::Index>(i)).transpose() - m.mean;
    m.cov += r * r.transpose();
  }
  m.cov /= static_cast<double>(m.count - 1);
  return m;
}

void check_weights(const Dataset& ds, const std::vector<double>& w) {
  const double n = static_cast<double>(ds.n());
  for (std::size_t k = 0; k < w.size(); ++k) {
    double c = 0;
    for (int l : *ds.labels) c += l == static_cast<int>(k);
    CHECK(std::abs(c / n - w[k]) < 3 * std::sqrt(w[k] * (1 - w[k]) / n));
  }
}

}  // namespace

TEST_CASE("Miller-Harrison geometry") {
  Rng rng(1);
  auto d1 = gen_miller_harrison(30000, 1, rng);
  for (int k = 0; k < 3; ++k) {
    double s = 0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < d1.n(); ++i) {
      if ((*d1.labels)[i] == k) {
        s += d1.x(static_cast<Eigen::Index>(i), 0);
        ++c;
      }
    }
    const double expect = -3.0 + 3.0 * k;
    CHECK(std::abs(s / c - expect) < 3.0 / std::sqrt(double(c)));
  }
  auto d9 = gen_miller_harrison(100000, 9, rng);
  check_weights(d9, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  for (int k = 0; k < 3; ++k) {
    Vector s = Vector::Zero(9);
    std::size_t c = 0;
    for (std::size_t i = 0; i < d9.n(); ++i) {
      if ((*d9.labels)[i] == k) {
        s += d9.x.row(static_cast<Eigen::Index>(i)).transpose();
        ++c;
      }
    }
    s /= static_cast<double>(c);
    for (int j = 0; j < 9; ++j) CHECK(std::abs(s[j] - (k - 1.0)) < 3.0 / std::sqrt(double(c)));
  }
}

TEST_CASE("motivating five cluster data") {
  Rng rng(2);
  auto ds = gen_motivating5(100000, rng);
  check_weights(ds, std::vector<double>(5, 0.2));
  const double centres[] = {-10, -5, 0, 5, 10};
  for (int k = 0; k < 5; ++k) {
    auto m = moments(ds, k);
    const double se = 1.0 / std::sqrt(double(m.count));
    CHECK(std::abs(m.mean[0] - centres[k]) < 3 * se);
    CHECK(std::abs(m.mean[1] - centres[k]) < 3 * se);
    // variance of a sample variance of unit normals is 2 / (n - 1)
    const double vse = std::sqrt(2.0 / (m.count - 1));
    CHECK(std::abs(m.cov(0, 0) - 1.0) < 3 * vse);
    CHECK(std::abs(m.cov(1, 1) - 1.0) < 3 * vse);
  }
}

TEST_CASE("misspecified four cluster data") {
  auto S = misspec4_rotated_covariance();
  CHECK(S(0, 0) == doctest::Approx(1.35).epsilon(1e-12));
  CHECK(S(0, 1) == doctest::Approx(1.15).epsilon(1e-12));
  CHECK(S(1, 0) == doctest::Approx(1.15).epsilon(1e-12));
  CHECK(S(1, 1) == doctest::Approx(1.35).epsilon(1e-12));

  Rng rng(3);
  auto ds = gen_misspec4(100000, rng);
  check_weights(ds, {0.44, 0.3, 0.25, 0.01});
  auto m = moments(ds, 1);
  const double n = static_cast<double>(m.count);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      // Wishart variance of a sample covariance entry: (S_ab^2 + S_aa S_bb) / (n - 1)
      const double se = std::sqrt((S(a, b) * S(a, b) + S(a, a) * S(b, b)) / (n - 1));
      CHECK(std::abs(m.cov(a, b) - S(a, b)) < 3 * se);
    }
  }
  auto m3 = moments(ds, 2);
  CHECK(std::abs(m3.cov(0, 0) - 3.0) < 3 * std::sqrt(2 * 9.0 / (m3.count - 1)));
  CHECK(std::abs(m3.cov(1, 1) - 0.1) < 3 * std::sqrt(2 * 0.01 / (m3.count - 1)));
}

TEST_CASE("generators are deterministic and hit every component") {
  for (auto fam : {Family::miller_harrison, Family::motivating5, Family::misspec4}) {
    SyntheticSpec spec{fam, 5000, 2, 17};
    auto a = generate(spec);
    auto b = generate(spec);
    CHECK(a.x == b.x);
    CHECK(*a.labels == *b.labels);
    std::set<int> distinct(a.labels->begin(), a.labels->end());
    CHECK(distinct.size() == spec.true_K());
  }
  SyntheticSpec bad{Family::motivating5, 100, 3, 0};
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("CSV ingestion") {
  SUBCASE("plain numeric") {
    auto p = write_tmp("plain.csv", "1.5,2\n3,-4e-1\n");
    CHECK_FALSE(csv_has_header(p));
    auto ds = load_csv(p, false);
    CHECK(ds.n() == 2);
    CHECK(ds.d() == 2);
    CHECK(ds.x(1, 1) == -0.4);
    CHECK_FALSE(ds.labels);
  }
  SUBCASE("label column by name and by index") {
    auto p = write_tmp("labelled.csv", "a,cls,b\n0.1,1,2\n0.2,2,3\n0.3,1,4\n");
    CHECK(csv_has_header(p));
    auto ds = load_csv(p, true, LabelColumn{std::string("cls")});
    CHECK(ds.d() == 2);
    REQUIRE(ds.labels);
    CHECK(*ds.labels == std::vector<int>{0, 1, 0});
    auto by_index = load_csv(p, true, LabelColumn{std::size_t{1}});
    CHECK(by_index.x == ds.x);
  }
  SUBCASE("error kinds") {
    auto kind_of = [](const std::string& path, bool header) {
      try {
        load_csv(path, header);
      } catch (const CsvError& e) {
        return e.kind();
      }
      FAIL("no error");
      return CsvError::Kind::empty;
    };
    CHECK(kind_of(write_tmp("ragged.csv", "1,2\n3\n"), false) == CsvError::Kind::ragged_row);
    CHECK(kind_of(write_tmp("nan.csv", "1,2\n3,nan\n"), false) == CsvError::Kind::non_finite);
    CHECK(kind_of("/nonexistent/dir/x.csv", false) == CsvError::Kind::missing_file);
    auto abc = write_tmp("abc.csv", "1,2\n3,abc\n");
    CHECK(kind_of(abc, false) == CsvError::Kind::non_numeric);
    CHECK_THROWS_WITH(load_csv(abc, false), "row 2, column 2: cannot parse 'abc'");
  }
}

TEST_CASE("standardization") {
  Dataset ds;
  ds.x.resize(2, 1);
  ds.x << 0, 2;
  auto [out, tr] = standardize(ds);
  CHECK(out.x(0, 0) == -1.0);
  CHECK(out.x(1, 0) == 1.0);
  CHECK(tr.mean[0] == 1.0);
  CHECK(tr.sd[0] == 1.0);

  Rng rng(5);
  Dataset r;
  r.x.resize(200, 3);
  for (Eigen::Index i = 0; i < r.x.size(); ++i) r.x.data()[i] = rng.normal(4, 7);
  auto [s1, t1] = standardize(r);
  auto [s2, t2] = standardize(s1);
  CHECK((s2.x - s1.x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((unstandardize(s1, t1).x - r.x).cwiseAbs().maxCoeff() < 1e-10);

  Dataset flat;
  flat.x = Matrix::Constant(5, 1, 3.0);
  CHECK_THROWS_WITH(standardize(flat), "degenerate column");
}
