#include "vmbd/numdiff.hpp"

#include <cmath>

#include "vmbd/errors.hpp"

namespace vmbd {

namespace {

const double kStepBase = std::cbrt(std::numeric_limits<double>::epsilon());

// Richardson-combined central difference of a flat vector probe.
// probe(delta) evaluates the function with one variable displaced by delta.
VecX richardson_central(const std::function<VecX(double)>& probe, double h) {
  const VecX fp = probe(h);
  const VecX fm = probe(-h);
  const VecX fp2 = probe(h / 2.0);
  const VecX fm2 = probe(-h / 2.0);
  const VecX coarse = (fp - fm) / (2.0 * h);
  const VecX fine = (fp2 - fm2) / h;
  return (4.0 * fine - coarse) / 3.0;
}

VecX checked_eval(const VectorFn& f, double t, const VecX& q) {
  VecX v = f(t, q);
  if (!v.allFinite()) {
    throw NonFiniteEvaluation("finite-difference probe returned non-finite entries");
  }
  return v;
}

}  // namespace

double derivative_step(double x) { return kStepBase * std::max(1.0, std::abs(x)); }

VectorPartials vector_function_partials(const VectorFn& f, double t,
                                        const VecX& q, int activeCoords) {
  const int m = static_cast<int>(q.size());
  const int active = activeCoords < 0 ? m : std::min(activeCoords, m);

  VectorPartials out;
  {
    const double h = derivative_step(t);
    out.wrtTime = richardson_central(
        [&](double d) { return checked_eval(f, t + d, q); }, h);
  }

  const Eigen::Index n = out.wrtTime.size();
  out.wrtCoord = MatX::Zero(n, m);
  VecX probeQ = q;
  for (int j = 0; j < active; ++j) {
    const double h = derivative_step(q[j]);
    out.wrtCoord.col(j) = richardson_central(
        [&](double d) {
          probeQ[j] = q[j] + d;
          VecX v = checked_eval(f, t, probeQ);
          probeQ[j] = q[j];
          return v;
        },
        h);
  }
  return out;
}

MatrixPartials matrix_function_partials(const MatrixFn& f, double t,
                                        const VecX& q) {
  // Capture the shape once, then differentiate the flattened bundle.
  const MatX base = f(t, q);
  if (!base.allFinite()) {
    throw NonFiniteEvaluation("matrix function non-finite at expansion point");
  }
  const Eigen::Index rows = base.rows();
  const Eigen::Index cols = base.cols();

  const VectorFn flat = [&f, rows, cols](double tt, const VecX& qq) -> VecX {
    MatX m = f(tt, qq);
    return Eigen::Map<const VecX>(m.data(), rows * cols);
  };

  const VectorPartials vp = vector_function_partials(flat, t, q);

  MatrixPartials out;
  out.wrtTime = Eigen::Map<const MatX>(vp.wrtTime.data(), rows, cols);
  out.wrtCoord.reserve(q.size());
  for (int j = 0; j < q.size(); ++j) {
    const VecX col = vp.wrtCoord.col(j);
    out.wrtCoord.push_back(Eigen::Map<const MatX>(col.data(), rows, cols));
  }
  return out;
}

VecX central_difference(const VectorFn& f, double t, const VecX& q, int coord,
                        double h) {
  if (coord < 0) {
    return (checked_eval(f, t + h, q) - checked_eval(f, t - h, q)) / (2.0 * h);
  }
  VecX qp = q, qm = q;
  qp[coord] += h;
  qm[coord] -= h;
  return (checked_eval(f, t, qp) - checked_eval(f, t, qm)) / (2.0 * h);
}

VecX scalar_gradient_wrt_q(const std::function<double(double, const VecX&)>& f,
                           double t, const VecX& q) {
  const int m = static_cast<int>(q.size());
  VecX grad(m);
  VecX probeQ = q;
  for (int j = 0; j < m; ++j) {
    const double h = derivative_step(q[j]);
    const auto probe = [&](double d) -> VecX {
      probeQ[j] = q[j] + d;
      const double v = f(t, probeQ);
      probeQ[j] = q[j];
      if (!std::isfinite(v)) {
        throw NonFiniteEvaluation("scalar probe returned a non-finite value");
      }
      VecX one(1);
      one[0] = v;
      return one;
    };
    grad[j] = richardson_central(probe, h)[0];
  }
  return grad;
}

}  // namespace vmbd
