#pragma once

#include <Eigen/Dense>
#include <limits>

namespace vmbd {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<      0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Dense partial-pivot LU with a condition estimate taken from the ratio of
/// extreme |U| pivots. The estimate is order-of-magnitude only, which is all
/// the singularity guards require; no explicit inverse is ever formed.
class PivotedFactor {
public:
  explicit PivotedFactor(const MatX& a) : lu_(a) {
    const VecX d = lu_.matrixLU().diagonal().cwiseAbs();
    if (d.size() == 0) {
      cond_ = 1.0;
      return;
    }
    const double lo = d.minCoeff();
    const double hi = d.maxCoeff();
    cond_ = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
  }

  double conditionEstimate() const { return cond_; }

  MatX solve(const MatX& rhs) const { return lu_.solve(rhs); }
  VecX solve(const VecX& rhs) const { return lu_.solve(rhs); }

private:
  Eigen::PartialPivLU<MatX> lu_;
  double cond_ = 1.0;
};

}  // namespace vmbd
