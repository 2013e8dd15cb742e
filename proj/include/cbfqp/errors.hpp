// Copyright 2026 The cbfqp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace cbfqp {

// Numeric evaluation failed (non-finite value, integrator breakdown, ...).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state was evaluated outside the region where a model or field is valid.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A reciprocal barrier was evaluated at h <= interior floor.
class BoundaryViolation : public DomainError {
 public:
  BoundaryViolation(const std::string& what, double h)
      : DomainError(what), h_(h) {}
  double h() const { return h_; }

 private:
  double h_;
};

// Invalid construction arguments or a failed structural precondition.
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The constraint set of a pointwise program is empty.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed scenario or command-line configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbfqp
