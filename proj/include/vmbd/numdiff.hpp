#pragma once

#include <functional>
#include <vector>

#include "vmbd/linalg.hpp"

namespace vmbd {

using MatrixFn = std::function<MatX(double, const VecX&)>;
using VectorFn = std::function<VecX(double, const VecX&)>;

/// Partial derivatives of a matrix-valued function of (t, q).
struct MatrixPartials {
  MatX wrtTime;                // d f / d t
  std::vector<MatX> wrtCoord;  // d f / d q_j, one entry per coordinate
};

/// Partial derivatives of a vector-valued function of (t, q).
/// wrtCoord column j holds d f / d q_j.
struct VectorPartials {
  VecX wrtTime;
  MatX wrtCoord;
};

/// Finite-difference step for a variable of magnitude |x|:
/// cbrt(machine epsilon) scaled by max(1, |x|).
double derivative_step(double x);

/// Central differences at steps h and h/2 combined by one Richardson level,
/// giving fourth-order accuracy on smooth functions. Throws
/// NonFiniteEvaluation if any probe returns a non-finite entry.
MatrixPartials matrix_function_partials(const MatrixFn& f, double t,
                                        const VecX& q);

/// Same policy for flat vector bundles; this is the workhorse the equation
/// engines use so one probe sweep differentiates every term at once.
/// activeCoords < q.size() differentiates only the leading coordinates and
/// leaves the remaining columns exactly zero; callers use this when the
/// bundle provably ignores the trailing coordinates (the probes would return
/// identical values, so the result is unchanged). Negative means all.
VectorPartials vector_function_partials(const VectorFn& f, double t,
                                        const VecX& q, int activeCoords = -1);

/// Single-direction central difference with caller-chosen step, no Richardson
/// combination. coord = -1 differentiates in t. Used by convergence-order
/// diagnostics; everything else should use the fixed-policy entry points.
VecX central_difference(const VectorFn& f, double t, const VecX& q, int coord,
                        double h);

/// Gradient of a scalar field with respect to q under the shared policy.
VecX scalar_gradient_wrt_q(const std::function<double(double, const VecX&)>& f,
                           double t, const VecX& q);

}  // namespace vmbd
