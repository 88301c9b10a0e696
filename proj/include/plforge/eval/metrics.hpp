// Copyright 2026 The plforge Authors
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

#pragma once

#include <string>

#include "plforge/common.hpp"

namespace plforge::eval {

// Unbiased pass@k estimate 1 - C(n-c, k) / C(n, k) from n samples of which
// c are correct, as a running product so no binomial is ever formed.
inline double pass_at_k(int n, int c, int k) {
  if (n < 1) throw ArgumentError("pass@k: n must be >= 1");
  if (c < 0 || c > n) throw ArgumentError("pass@k: c must be in [0, n]");
  if (k < 1) throw ArgumentError("pass@k: k must be >= 1");
  if (k > n) throw ArgumentError("pass@k: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

}  // namespace plforge::eval
