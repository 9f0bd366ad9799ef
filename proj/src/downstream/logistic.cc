// Copyright 2026 The iclbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "iclbias/downstream.h"
#include "iclbias/error.h"
#include "src/downstream/internal.h"

namespace iclbias {

LogisticObjective LogisticLossGrad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01,
                                   const Eigen::VectorXd& w, double l2) {
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd z = x * w;
  Eigen::VectorXd p(z.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z(i);
    // softplus(z) - y z, computed without overflow.
    loss += std::max(zi, 0.0) + std::log1p(std::exp(-std::fabs(zi))) - y01(i) * zi;
    p(i) = zi >= 0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
  }
  LogisticObjective obj;
  Eigen::VectorXd reg = w;
  reg(reg.size() - 1) = 0.0;
  obj.loss = loss / n + 0.5 * l2 * reg.squaredNorm();
  obj.grad = x.transpose() * (p - y01) / n + l2 * reg;
  return obj;
}

namespace internal {

Eigen::VectorXd FitBinaryLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01,
                                  const LogisticParams& params, std::vector<double>* trace,
                                  int* iterations, double* grad_norm) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  LogisticObjective obj = LogisticLossGrad(x, y01, w, params.l2);
  if (trace) trace->push_back(obj.loss);
  double step = params.step;
  int it = 0;
  while (it < params.max_iter && obj.grad.norm() >= params.grad_tol) {
    bool accepted = false;
    while (step > 1e-14) {
      Eigen::VectorXd cand = w - step * obj.grad;
      LogisticObjective next = LogisticLossGrad(x, y01, cand, params.l2);
      if (next.loss <= obj.loss) {
        w = std::move(cand);
        obj = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++it;
    if (trace) trace->push_back(obj.loss);
  }
  if (iterations) *iterations = it;
  if (grad_norm) *grad_norm = obj.grad.norm();
  return w;
}

}  // namespace internal
}  // namespace iclbias
