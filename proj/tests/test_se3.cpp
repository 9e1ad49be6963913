#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coopfuse/rng.hpp"
#include "coopfuse/se3.hpp"
#include "oracles.hpp"

using namespace coopfuse;

namespace {

Vec6 random_tangent(Rng& rng, double rot_scale, double trans_scale) {
  Vec6 xi;
  for (int i = 0; i < 3; ++i) xi(i) = rng.uniform(-rot_scale, rot_scale);
  for (int i = 3; i < 6; ++i) xi(i) = rng.uniform(-trans_scale, trans_scale);
  return xi;
}

Pose random_pose(Rng& rng, double rot_scale = 1.5, double trans_scale = 5.0) {
  return se3_exp(random_tangent(rng, rot_scale, trans_scale));
}

}  // namespace

TEST_CASE("skew matches the cross product") {
  CHECK((skew(Vec3(1, 0, 0)) * Vec3(0, 1, 0) - Vec3(0, 0, 1)).norm() == 0.0);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const Vec3 w(rng.normal(), rng.normal(), rng.normal());
    CHECK((skew(v) * w - v.cross(w)).norm() < 1e-15);
    CHECK((skew(v).transpose() + skew(v)).norm() == 0.0);
  }
}

TEST_CASE("exp of zero is the identity") {
  const Pose p = se3_exp(Vec6::Zero());
  CHECK((p.rotation - Mat3::Identity()).norm() == 0.0);
  CHECK(p.translation.norm() == 0.0);
}

TEST_CASE("pure rotation exp") {
  const Pose p = se3_exp(make_tangent(Vec3(0, 0, M_PI / 2), Vec3::Zero()));
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((p.rotation - expected).norm() < 1e-15);
  CHECK(p.translation.norm() == 0.0);
}

TEST_CASE("exp with quarter-turn yaw and unit x step") {
  const Pose p = se3_exp(make_tangent(Vec3(0, 0, M_PI / 2), Vec3(1, 0, 0)));
  CHECK(p.translation.x() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
  CHECK(p.translation.y() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
  CHECK(std::abs(p.translation.z()) < 1e-15);
  const oracles::Mat4 series = oracles::series_exp(
      make_tangent(Vec3(0, 0, M_PI / 2), Vec3(1, 0, 0)));
  CHECK((oracles::homogeneous(p) - series).norm() < 1e-12);
}

TEST_CASE("exp agrees with the 20-term series for small arguments") {
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    Vec6 xi = random_tangent(rng, 1.0, 1.0);
    if (xi.norm() > 1.0) xi *= 1.0 / xi.norm() * rng.uniform();
    const double err =
        (oracles::homogeneous(se3_exp(xi)) - oracles::series_exp(xi)).norm();
    CHECK(err < 1e-10);
  }
}

TEST_CASE("log round trip for rotations up to norm 3") {
  Rng rng(37);
  for (int i = 0; i < 300; ++i) {
    Vec6 xi = random_tangent(rng, 1.0, 10.0);
    xi.head<3>() *= 3.0 / 1.0 * rng.uniform();
    if (xi.head<3>().norm() >= M_PI - 1e-3) continue;
    const Vec6 back = se3_log(se3_exp(xi));
    CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("log of identity is zero") {
  CHECK(se3_log(Pose::identity()).norm() == 0.0);
}

TEST_CASE("log agrees with the matrix-logarithm series oracle") {
  const Pose pose = pose_from_yaw(0.3, Vec3(1, 2, 3));
  const Vec6 xi = se3_log(pose);
  const Vec6 reference = oracles::series_log(pose);
  CHECK((xi - reference).cwiseAbs().maxCoeff() < 1e-10);

  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng, 1.2, 3.0);
    CHECK((se3_log(p) - oracles::series_log(p)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("log rejects rotations near pi") {
  const Pose near_pi = se3_exp(make_tangent(Vec3(0, 0, M_PI - 1e-8), Vec3::Zero()));
  CHECK_THROWS_AS((void)se3_log(near_pi), AngleNearPiError);
  const Pose fine = se3_exp(make_tangent(Vec3(0, 0, M_PI - 1e-4), Vec3::Zero()));
  CHECK_NOTHROW((void)se3_log(fine));
}

TEST_CASE("right jacobian defining relation") {
  Rng rng(53);
  CHECK((se3_right_jacobian(Vec6::Zero()) - Mat6::Identity()).norm() == 0.0);
  for (int i = 0; i < 100; ++i) {
    const Vec6 xi = random_tangent(rng, 1.5, 3.0);
    const Mat6 jr = se3_right_jacobian(xi);
    // exp(xi + d) ~ exp(xi) exp(Jr d): recover Jr columns by differencing
    const Eigen::MatrixXd numeric = oracles::numeric_jacobian(
        [&](const Vec6& d) -> Eigen::VectorXd {
          return se3_log(se3_exp(xi).inverse() * se3_exp(xi + d));
        },
        6);
    CHECK((jr - numeric).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("right jacobian inverse is the matrix inverse") {
  Rng rng(59);
  for (int i = 0; i < 100; ++i) {
    const Vec6 xi = random_tangent(rng, 1.5, 3.0);
    const Mat6 product = se3_right_jacobian(xi) * se3_right_jacobian_inv(xi);
    CHECK((product - Mat6::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("adjoint defining relation") {
  CHECK((se3_adjoint(Pose::identity()) - Mat6::Identity()).norm() == 0.0);
  Rng rng(61);
  for (int i = 0; i < 100; ++i) {
    const Pose t = random_pose(rng);
    const Mat6 ad = se3_adjoint(t);
    const Eigen::MatrixXd numeric = oracles::numeric_jacobian(
        [&](const Vec6& d) -> Eigen::VectorXd {
          return se3_log(t * se3_exp(d) * t.inverse());
        },
        6);
    CHECK((ad - numeric).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("adjoint is a homomorphism") {
  Rng rng(67);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    CHECK((se3_adjoint(a * b) - se3_adjoint(a) * se3_adjoint(b))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("pose composition and inverse") {
  Rng rng(71);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose c = random_pose(rng);
    const Pose left = (a * b) * c;
    const Pose right = a * (b * c);
    CHECK((left.rotation - right.rotation).norm() < 1e-12);
    CHECK((left.translation - right.translation).norm() < 1e-9);
    const Pose id = a * a.inverse();
    CHECK((id.rotation - Mat3::Identity()).norm() < 1e-9);
    CHECK(id.translation.norm() < 1e-9);
  }
}

TEST_CASE("interpolation endpoints and straight line") {
  Rng rng(73);
  const Pose a = random_pose(rng);
  const Pose b = random_pose(rng);
  const Pose at0 = pose_interpolate(a, b, 0.0);
  CHECK((at0.rotation - a.rotation).norm() == 0.0);
  CHECK((at0.translation - a.translation).norm() == 0.0);
  const Pose at1 = pose_interpolate(a, b, 1.0);
  CHECK((at1.rotation - b.rotation).norm() < 1e-9);
  CHECK((at1.translation - b.translation).norm() < 1e-9);

  const Pose mid = pose_interpolate(Pose::identity(),
                                    Pose(Mat3::Identity(), Vec3(2, 0, 0)), 0.5);
  CHECK((mid.translation - Vec3(1, 0, 0)).norm() < 1e-12);

  CHECK_THROWS_AS((void)pose_interpolate(a, b, 1.5), std::invalid_argument);
}

TEST_CASE("interpolation symmetry on one-parameter subgroups") {
  Rng rng(79);
  for (int i = 0; i < 20; ++i) {
    // pure translation
    const Pose a = Pose(Mat3::Identity(),
                        Vec3(rng.normal(), rng.normal(), rng.normal()));
    const Pose b = Pose(Mat3::Identity(),
                        Vec3(rng.normal(), rng.normal(), rng.normal()));
    const double tau = rng.uniform();
    const Pose fwd = pose_interpolate(a, b, tau);
    const Pose bwd = pose_interpolate(b, a, 1.0 - tau);
    CHECK((fwd.translation - bwd.translation).norm() < 1e-9);
    CHECK((fwd.rotation - bwd.rotation).norm() < 1e-9);

    // pure rotation about a common axis
    const Pose ra = pose_from_yaw(rng.uniform(-1.5, 1.5), Vec3::Zero());
    const Pose rb = pose_from_yaw(rng.uniform(-1.5, 1.5), Vec3::Zero());
    const Pose rf = pose_interpolate(ra, rb, tau);
    const Pose rv = pose_interpolate(rb, ra, 1.0 - tau);
    CHECK((rf.rotation - rv.rotation).norm() < 1e-9);
  }
}

TEST_CASE("rotation invariants hold for generated poses") {
  Rng rng(83);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    CHECK(is_orthonormal(p.rotation));
  }
}

TEST_CASE("yaw helpers") {
  const Pose p = pose_from_yaw(0.7, Vec3(1, 2, 3));
  CHECK(rotation_yaw(p.rotation) == doctest::Approx(0.7).epsilon(1e-12));
}
