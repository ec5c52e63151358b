#include <Eigen/Dense>

#include "doctest.h"
#include "spatboost/weights.hpp"

using namespace spatboost;

namespace {

Eigen::MatrixXd dense(const WeightMatrix& w) {
  return Eigen::MatrixXd(w.matrix());
}

}  // namespace

TEST_CASE("circular ring adjacency") {
  const WeightMatrix w = build_circular(4, 1);
  const Eigen::MatrixXd d = dense(w);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 3) == 1.0);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 2) == 0.0);
}

TEST_CASE("circular n=400 K=5 has 10 neighbors per row") {
  const WeightMatrix w = build_circular(400, 5);
  const SparseMat& m = w.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    int nnz = 0;
    for (SparseMat::InnerIterator it(m, i); it; ++it) ++nnz;
    CHECK(nnz == 10);
  }
}

TEST_CASE("circular complete-graph edge case n=5 K=2") {
  const WeightMatrix w = build_circular(5, 2);
  const Eigen::MatrixXd d = dense(w);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(d(i, j) == (i == j ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("circular rejects n <= 2K") {
  CHECK_THROWS_AS(build_circular(4, 2), ValidationError);
  CHECK_THROWS_AS(build_circular(2, 1), ValidationError);
  CHECK_THROWS_AS(build_circular(10, 0), ValidationError);
}

TEST_CASE("circular matrix is symmetric before and after normalization") {
  const WeightMatrix w = build_circular(9, 2);
  const Eigen::MatrixXd raw = dense(w);
  CHECK((raw - raw.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd norm = dense(row_normalize(w));
  CHECK((norm - norm.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn collinear points") {
  Coordinates c;
  c.x.resize(3);
  c.x << 0.0, 1.0, 10.0;
  c.y = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd d = dense(build_knn(c, 1));
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 0) == 1.0);
  CHECK(d(2, 1) == 1.0);
  CHECK(d.sum() == 3.0);
}

TEST_CASE("knn unit square excludes the diagonal corner") {
  Coordinates c;
  c.x.resize(4);
  c.y.resize(4);
  c.x << 0.0, 1.0, 1.0, 0.0;
  c.y << 0.0, 0.0, 1.0, 1.0;
  const Eigen::MatrixXd d = dense(build_knn(c, 2));
  // corner 0 is edge-adjacent to 1 and 3, diagonal to 2
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 3) == 1.0);
  CHECK(d(0, 2) == 0.0);
  CHECK(d(2, 1) == 1.0);
  CHECK(d(2, 3) == 1.0);
  CHECK(d(2, 0) == 0.0);
}

TEST_CASE("knn rejects bad inputs") {
  Coordinates c;
  c.x.resize(3);
  c.x << 0.0, 1.0, 2.0;
  c.y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(build_knn(c, 3), ValidationError);
  c.x[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_knn(c, 1), ValidationError);
}

TEST_CASE("knn distance ties break toward the lower index") {
  Coordinates c;
  c.x.resize(3);
  c.y.resize(3);
  c.x << 0.0, 1.0, -1.0;
  c.y << 0.0, 0.0, 0.0;
  const Eigen::MatrixXd d = dense(build_knn(c, 1));
  CHECK(d(0, 1) == 1.0);  // points 1 and 2 equidistant from 0
  CHECK(d(0, 2) == 0.0);
}

TEST_CASE("row normalization values") {
  const Eigen::MatrixXd d4 = dense(row_normalize(build_circular(4, 1)));
  CHECK(d4(0, 1) == 0.5);
  CHECK(d4(0, 3) == 0.5);

  const WeightMatrix w400 = row_normalize(build_circular(400, 5));
  for (int i = 0; i < w400.matrix().outerSize(); ++i) {
    for (SparseMat::InnerIterator it(w400.matrix(), i); it; ++it) {
      CHECK(it.value() == doctest::Approx(0.1).epsilon(1e-15));
    }
  }

  const WeightMatrix raw = WeightMatrix::from_triplets(
      2, {{0, 1, 2.0}, {1, 0, 3.0}}, false);
  // a row holding raw weights (2, 3) in a 3-location world
  const WeightMatrix mixed = WeightMatrix::from_triplets(
      3, {{0, 1, 2.0}, {0, 2, 3.0}, {1, 0, 1.0}, {2, 0, 1.0}}, false);
  const Eigen::MatrixXd dm = dense(row_normalize(mixed));
  CHECK(dm(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(dm(0, 2) == doctest::Approx(0.6).epsilon(1e-15));
  (void)raw;
}

TEST_CASE("row normalization is idempotent") {
  const WeightMatrix once = row_normalize(build_circular(11, 3));
  const WeightMatrix twice = row_normalize(once);
  const Eigen::MatrixXd diff = dense(once) - dense(twice);
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("row normalization rejects isolated locations") {
  const WeightMatrix w =
      WeightMatrix::from_triplets(3, {{0, 1, 1.0}, {1, 0, 1.0}}, false);
  try {
    row_normalize(w);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("spatial lag averages ring neighbors") {
  const WeightMatrix w = row_normalize(build_circular(4, 1));
  Eigen::VectorXd v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  const Eigen::VectorXd out = w.lag(v);
  CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(out[3] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("spatial lag of the zero matrix is zero") {
  const WeightMatrix w = WeightMatrix::from_triplets(4, {}, false);
  Eigen::VectorXd v(4);
  v << 1.0, -2.0, 3.0, 4.0;
  CHECK(w.lag(v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("double lag matches the dense squared-matrix oracle") {
  const WeightMatrix w = row_normalize(build_circular(15, 3));
  Eigen::VectorXd u(15);
  for (int i = 0; i < 15; ++i) u[i] = std::sin(1.0 + i);
  const Eigen::MatrixXd dw = dense(w);
  const Eigen::VectorXd oracle = (dw * dw) * u;
  CHECK((w.lag(w.lag(u)) - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spatial lag is linear") {
  const WeightMatrix w = row_normalize(build_circular(10, 2));
  Eigen::MatrixXd m1 = Eigen::MatrixXd::Random(10, 3);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Random(10, 3);
  const Eigen::MatrixXd lhs = w.lag(Eigen::MatrixXd(2.5 * m1 - 0.75 * m2));
  const Eigen::MatrixXd rhs = 2.5 * w.lag(m1) - 0.75 * w.lag(m2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("row-normalized lag preserves constants exactly") {
  const WeightMatrix w = row_normalize(build_circular(8, 2));
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(8, 7.0);
  CHECK((w.lag(c) - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lag rejects dimension mismatch") {
  const WeightMatrix w = build_circular(5, 1);
  CHECK_THROWS_AS(w.lag(Eigen::VectorXd(Eigen::VectorXd::Zero(4))),
                  ValidationError);
}

TEST_CASE("validate: clean matrix, self-loop, wrong normalization flag") {
  CHECK(validate(row_normalize(build_circular(6, 1))).empty());

  SparseMat loop(3, 3);
  loop.insert(1, 1) = 0.3;
  loop.insert(0, 1) = 1.0;
  const auto v1 = validate(loop, false);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0].find("self-loop") != std::string::npos);
  CHECK(v1[0].find("1") != std::string::npos);

  const auto v2 = validate(build_circular(4, 1).matrix(), true);
  CHECK(v2.size() == 4);  // every raw row sums to 2, not 1
}

TEST_CASE("construction rejects negative and self-loop weights") {
  CHECK_THROWS_AS(WeightMatrix::from_triplets(2, {{0, 1, -1.0}}, false),
                  ValidationError);
  CHECK_THROWS_AS(WeightMatrix::from_triplets(2, {{1, 1, 0.5}}, false),
                  ValidationError);
}
