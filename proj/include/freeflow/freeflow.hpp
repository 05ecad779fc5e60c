// Copyright 2026 The freeflow Authors
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

#ifndef FREEFLOW_FREEFLOW_HPP
#define FREEFLOW_FREEFLOW_HPP

#include "freeflow/calculus.hpp"
#include "freeflow/currents.hpp"
#include "freeflow/dense_simplex.hpp"
#include "freeflow/error.hpp"
#include "freeflow/experiments.hpp"
#include "freeflow/freenorm.hpp"
#include "freeflow/geometry.hpp"
#include "freeflow/io.hpp"
#include "freeflow/mesh.hpp"
#include "freeflow/network_simplex.hpp"
#include "freeflow/primitives.hpp"
#include "freeflow/runner.hpp"

#endif  // FREEFLOW_FREEFLOW_HPP
