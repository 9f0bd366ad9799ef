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

#ifndef ICLBIAS_SRC_DOWNSTREAM_INTERNAL_H_
#define ICLBIAS_SRC_DOWNSTREAM_INTERNAL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "iclbias/downstream.h"

namespace iclbias::internal {

Eigen::VectorXd FitBinaryLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01,
                                  const LogisticParams& params, std::vector<double>* trace,
                                  int* iterations, double* grad_norm);

// y holds class indices into `classes`; ties in votes go to the
// lexicographically smallest class name.
std::vector<Tree> FitForest(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            const std::vector<std::string>& classes,
                            const ForestParams& params, std::uint64_t seed);

int PredictForest(const std::vector<Tree>& trees, const Eigen::MatrixXd& x, Eigen::Index row,
                  const std::vector<std::string>& classes);

// Index of the largest count; ties broken by class name.
int ArgmaxByName(const std::vector<double>& counts, const std::vector<std::string>& classes);

}  // namespace iclbias::internal

#endif  // ICLBIAS_SRC_DOWNSTREAM_INTERNAL_H_
