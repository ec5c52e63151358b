#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "spatboost/family.hpp"

using namespace spatboost;

namespace {

Eigen::VectorXd random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(gen);
  return v;
}

}  // namespace

TEST_CASE("spatial loss with lambda=0 sigma2=1 is the plain RSS") {
  const WeightMatrix w = row_normalize(build_circular(8, 2));
  const Family fam = Family::spatial_error(make_spatial_structure(w, 0.0, 1.0));
  const Eigen::VectorXd y = random_vec(8, 1);
  const Eigen::VectorXd eta = random_vec(8, 2);
  CHECK(fam.loss(y, eta) ==
        doctest::Approx((y - eta).squaredNorm()).epsilon(1e-14));
}

TEST_CASE("loss vanishes at eta = y for both families") {
  const WeightMatrix w = row_normalize(build_circular(8, 2));
  const Eigen::VectorXd y = random_vec(8, 3);
  CHECK(Family::squared_error().loss(y, y) == 0.0);
  const Family fam = Family::spatial_error(make_spatial_structure(w, 0.4, 2.0));
  CHECK(fam.loss(y, y) == 0.0);
}

TEST_CASE("spatial loss matches the dense inverse-covariance oracle") {
  const WeightMatrix w = row_normalize(build_circular(4, 1));
  const double lambda = 0.5, sigma2 = 2.0;
  const Family fam =
      Family::spatial_error(make_spatial_structure(w, lambda, sigma2));
  Eigen::VectorXd y(4), eta(4);
  y << 1.0, -2.0, 0.5, 3.0;
  eta << 0.2, 0.1, -0.4, 1.0;

  const Eigen::MatrixXd dw(w.matrix());
  const Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(4, 4) - lambda * dw;
  const Eigen::MatrixXd omega = sigma2 * (p.transpose() * p).inverse();
  const Eigen::VectorXd r = y - eta;
  const double oracle = r.dot(omega.inverse() * r);
  CHECK(fam.loss(y, eta) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("negative gradient basics") {
  const WeightMatrix w = row_normalize(build_circular(6, 1));
  const Eigen::VectorXd y = random_vec(6, 4);
  const Family sq = Family::squared_error();
  CHECK(sq.negative_gradient(y, y).cwiseAbs().maxCoeff() == 0.0);

  const Family id = Family::spatial_error(make_spatial_structure(w, 0.0, 1.0));
  const Eigen::VectorXd eta = random_vec(6, 5);
  CHECK((id.negative_gradient(y, eta) - 2.0 * (y - eta)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("negative gradient matches central finite differences") {
  const WeightMatrix w = row_normalize(build_circular(10, 2));
  const Family fam = Family::spatial_error(make_spatial_structure(w, -0.6, 1.5));
  const Eigen::VectorXd y = random_vec(10, 6);
  Eigen::VectorXd eta = random_vec(10, 7);
  const Eigen::VectorXd grad = fam.negative_gradient(y, eta);
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd up = eta, dn = eta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (fam.loss(y, up) - fam.loss(y, dn)) / (2 * h);
    CHECK(std::abs(-fd - grad[i]) / std::max(1.0, std::abs(grad[i])) < 1e-6);
  }
}

TEST_CASE("pointwise risk sums to the loss and vanishes at eta = y") {
  const WeightMatrix w = row_normalize(build_circular(12, 3));
  const Eigen::VectorXd y = random_vec(12, 8);
  const Eigen::VectorXd eta = random_vec(12, 9);
  for (const Family& fam :
       {Family::squared_error(),
        Family::spatial_error(make_spatial_structure(w, 0.7, 0.5))}) {
    const Eigen::VectorXd r = fam.pointwise_risk(y, eta);
    CHECK(r.minCoeff() >= 0.0);
    CHECK(r.sum() == doctest::Approx(fam.loss(y, eta)).epsilon(1e-12));
    CHECK(fam.pointwise_risk(y, y).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lambda=0 sigma2=1 spatial pointwise risk equals squared error") {
  const WeightMatrix w = row_normalize(build_circular(7, 1));
  const Family sp = Family::spatial_error(make_spatial_structure(w, 0.0, 1.0));
  const Eigen::VectorXd y = random_vec(7, 10);
  const Eigen::VectorXd eta = random_vec(7, 11);
  const Eigen::VectorXd a = sp.pointwise_risk(y, eta);
  const Eigen::VectorXd b = Family::squared_error().pointwise_risk(y, eta);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("log-determinant of the precision factor") {
  const WeightMatrix w3 = row_normalize(build_circular(3, 1));
  CHECK(log_det_precision(make_spatial_structure(w3, 0.0, 1.0)) ==
        doctest::Approx(0.0).epsilon(1e-14));

  const double lambda = 0.5;
  const Eigen::MatrixXd dense =
      Eigen::MatrixXd::Identity(3, 3) - lambda * Eigen::MatrixXd(w3.matrix());
  const double oracle = std::log(std::abs(dense.determinant()));
  CHECK(log_det_precision(make_spatial_structure(w3, lambda, 1.0)) ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("log-determinant is invariant under permutation similarity") {
  const WeightMatrix w = row_normalize(build_circular(6, 1));
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.setIdentity();
  std::swap(perm.indices()[0], perm.indices()[4]);
  std::swap(perm.indices()[2], perm.indices()[5]);
  const Eigen::MatrixXd pd =
      perm * Eigen::MatrixXd(w.matrix()) * perm.transpose();
  const WeightMatrix wp(SparseMat(pd.sparseView()), true);
  const double a = log_det_precision(make_spatial_structure(w, 0.3, 1.0));
  const double b = log_det_precision(make_spatial_structure(wp, 0.3, 1.0));
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("gradient scales inversely with sigma2") {
  const WeightMatrix w = row_normalize(build_circular(9, 2));
  const Eigen::VectorXd y = random_vec(9, 12);
  const Eigen::VectorXd eta = random_vec(9, 13);
  const Eigen::VectorXd g1 =
      Family::spatial_error(make_spatial_structure(w, 0.4, 1.0))
          .negative_gradient(y, eta);
  const Eigen::VectorXd g3 =
      Family::spatial_error(make_spatial_structure(w, 0.4, 3.0))
          .negative_gradient(y, eta);
  CHECK((3.0 * g3 - g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("structure construction rejects invalid parameters") {
  const WeightMatrix w = row_normalize(build_circular(5, 1));
  CHECK_THROWS_AS(make_spatial_structure(w, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(make_spatial_structure(w, -1.2, 1.0), ValidationError);
  CHECK_THROWS_AS(make_spatial_structure(w, 0.3, 0.0), ValidationError);
}

TEST_CASE("non-finite inputs are rejected") {
  const Family fam = Family::squared_error();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(3);
  eta[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fam.loss(y, eta), ValidationError);
  CHECK_THROWS_AS(fam.negative_gradient(y, eta), ValidationError);
  CHECK_THROWS_AS(fam.pointwise_risk(y, eta), ValidationError);
}
