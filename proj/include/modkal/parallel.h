// Copyright 2026 The Modkal Authors
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

#ifndef MODKAL_PARALLEL_H_
#define MODKAL_PARALLEL_H_

namespace modkal {

// Selects between the serial reference loop and the OpenMP-parallel loop of a
// data-parallel kernel. Both produce bit-identical results: every parallel
// iteration writes a disjoint slice and reductions are never split.
enum class Exec { kSerial, kParallel };

inline bool RunParallel(Exec exec) { return exec == Exec::kParallel; }

}  // namespace modkal

#endif  // MODKAL_PARALLEL_H_
