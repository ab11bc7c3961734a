// Copyright 2026 The tracemix Authors
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

#include "tracemix/clustering.hpp"
#include "tracemix/combiner.hpp"
#include "tracemix/csv.hpp"
#include "tracemix/error.hpp"
#include "tracemix/executors.hpp"
#include "tracemix/ingestion.hpp"
#include "tracemix/profiling.hpp"
#include "tracemix/random.hpp"
#include "tracemix/replay.hpp"
#include "tracemix/service_api.hpp"
#include "tracemix/synthetic.hpp"
#include "tracemix/trace_model.hpp"
