// Copyright 2026 The pubfeat-dp Authors
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

#include <cstdint>
#include <functional>

namespace pubfeat {

// Worker cap: PUBFEAT_DP_THREADS environment variable if set (clamped to
// >= 1), otherwise the hardware concurrency. set_max_threads overrides both;
// 0 restores the default resolution.
int max_threads();
void set_max_threads(int n);

// Runs fn(i) for i in [0, n). Iterations must be independent (each writes
// only its own slots); under that contract results are identical for any
// thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace pubfeat
