// Copyright 2026 The kiv Authors
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

#include "kiv/error.hpp"
#include "kiv/linalg.hpp"
#include "kiv/kernels.hpp"
#include "kiv/filters.hpp"
#include "kiv/discrete.hpp"
#include "kiv/stage1.hpp"
#include "kiv/stage2.hpp"
#include "kiv/grouped.hpp"
#include "kiv/scenarios.hpp"
#include "kiv/rate_theory.hpp"
#include "kiv/experiments.hpp"
#include "kiv/io.hpp"
