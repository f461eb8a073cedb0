// Copyright 2026 The nbd Authors
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

#include <functional>

namespace nbd {

// Process-wide cap on worker threads used by parallel_for. Defaults to 1.
// Work is always partitioned so that each output element is produced by
// exactly one task, hence results do not depend on the thread count.
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n). Blocks until all iterations finish. The
// first exception thrown by any iteration is rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace nbd
