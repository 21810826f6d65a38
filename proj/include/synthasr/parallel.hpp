// Copyright (c) 2026 The synthasr Authors
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

#include <cstddef>
#include <functional>

namespace synthasr {

// Worker count from SYNTHASR_WORKERS, else the hardware concurrency.
int DefaultWorkers();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is handed
// out by index so results written to per-index slots do not depend on
// scheduling. The first exception is rethrown after all workers stop.
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace synthasr
