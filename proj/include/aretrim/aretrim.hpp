// Copyright 2026 The aretrim Authors
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

#include "aretrim/core.hpp"
#include "aretrim/dispersion.hpp"
#include "aretrim/em.hpp"
#include "aretrim/io.hpp"
#include "aretrim/kmeans.hpp"
#include "aretrim/pipeline.hpp"
#include "aretrim/rng.hpp"
#include "aretrim/special.hpp"
#include "aretrim/synth.hpp"
#include "aretrim/verify.hpp"
