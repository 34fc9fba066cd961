/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "roomcast/calendar.hpp"
#include "roomcast/common.hpp"
#include "roomcast/csv.hpp"
#include "roomcast/dataio.hpp"
#include "roomcast/explain.hpp"
#include "roomcast/features.hpp"
#include "roomcast/fft.hpp"
#include "roomcast/forecast.hpp"
#include "roomcast/gbm.hpp"
#include "roomcast/json_io.hpp"
#include "roomcast/linalg.hpp"
#include "roomcast/pffra.hpp"
#include "roomcast/pipeline.hpp"
#include "roomcast/stats.hpp"
#include "roomcast/time.hpp"
