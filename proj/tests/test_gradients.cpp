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

#include <gtest/gtest.h>

#include "field_cases.hpp"

TEST(Gradients, BuiltinFieldsMatchFiniteDifferences) {
  const auto cases = field_cases::builtin_cases();
  EXPECT_GE(cases.size(), 45u);
  for (const auto& c : cases) {
    const auto r = field_cases::check_gradient(c);
    EXPECT_EQ(r.draws, 100) << c.label;
    EXPECT_LE(r.worst_relative, 1e-5) << c.label;
  }
}
