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

#ifndef PRIVSHIFT_RANDOM_HPP_
#define PRIVSHIFT_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace privshift {

// Every stochastic operation takes an explicit engine; nothing in the library
// touches global random state.
using Rng = std::mt19937_64;

std::uint64_t SplitMix64(std::uint64_t x);

// Derives an independent 64-bit seed from a base seed and a path of stream
// labels, e.g. DeriveSeed(base, {study, p, rep}). Order-sensitive in the path,
// insensitive to how many other streams were derived before it.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path);

Rng MakeRng(std::uint64_t base, std::initializer_list<std::uint64_t> path);

double StandardNormal(Rng& rng);

// Column-major fill with iid standard normals.
Eigen::MatrixXd StandardNormalMatrix(Eigen::Index rows, Eigen::Index cols,
                                     Rng& rng);

bool Bernoulli(Rng& rng, double probability);

}  // namespace privshift

#endif  // PRIVSHIFT_RANDOM_HPP_
