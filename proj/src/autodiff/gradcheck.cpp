#include "gde/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gde::ad {

namespace {

double evaluate(const ParameterSet& params, const LossBuilder& loss) {
  Tape tape;
  Binding b(tape, params, false);
  return loss(b).value()(0, 0);
}

}  // namespace

GradcheckResult gradcheck(const std::string& name, const ParameterSet& params, const LossBuilder& loss,
                          double tolerance, double eps, double floor) {
  GradcheckResult r;
  r.name = name;
  r.tolerance = tolerance;

  std::map<std::string, Matrix> analytic;
  {
    Tape tape;
    Binding b(tape, params);
    analytic = b.collect(tape.backward(loss(b)));
  }

  ParameterSet probe = params;
  for (const auto& [pname, value] : params) {
    Matrix numeric(value.rows(), value.cols());
    Matrix& p = probe.at(pname);
    for (Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + eps;
      const double up = evaluate(probe, loss);
      p.data()[i] = saved - eps;
      const double down = evaluate(probe, loss);
      p.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * eps);
    }
    const Matrix& a = analytic.at(pname);
    const double scale = std::max(a.norm(), numeric.norm());
    const double rel = scale < floor ? 0.0 : (a - numeric).norm() / scale;
    if (rel >= r.worst_relative) {
      r.worst_relative = rel;
      r.worst_parameter = pname;
      (a - numeric).cwiseAbs().maxCoeff(&r.worst_row, &r.worst_col);
    }
  }
  r.passed = std::isfinite(r.worst_relative) && r.worst_relative < tolerance;
  return r;
}

}  // namespace gde::ad
