//
// Copyright 2026 The privshift Authors.
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
//

#ifndef PRIVSHIFT_SYNTHESIS_HPP_
#define PRIVSHIFT_SYNTHESIS_HPP_

#include <optional>
#include <vector>

#include "privshift/core_model.hpp"
#include "privshift/random.hpp"

namespace privshift {

// Linear-Gaussian sequential synthesizer. The first column in `column_order`
// is drawn from Normal(first_mean, first_variance); every later column k is
// drawn from models[k-1] evaluated on the columns already synthesized, plus
// Normal(0, residual_variance) noise.
struct SequentialSynthesizer {
  // Data-matrix column indices (1 = Y, 2..p+1 = X), a permutation.
  std::vector<int> column_order;
  double first_mean = 0.0;
  double first_variance = 0.0;
  std::vector<LinearModel> models;
  std::vector<std::string> column_names;
};

// `order` lists data-matrix column indices; defaults to Y then X1..Xp.
SequentialSynthesizer FitSequential(
    const DataMatrix& d, std::optional<std::vector<int>> order = std::nullopt);

DataMatrix Synthesize(const SequentialSynthesizer& s, Eigen::Index m_out,
                      Rng& rng);

}  // namespace privshift

#endif  // PRIVSHIFT_SYNTHESIS_HPP_
