// Copyright 2026 The Vo-Ve Authors.
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

// Umbrella header: the whole Vo-Ve toolkit.

#pragma once

#include "vove/attributes.hpp"
#include "vove/audio.hpp"
#include "vove/autodiff.hpp"
#include "vove/config.hpp"
#include "vove/error.hpp"
#include "vove/explain.hpp"
#include "vove/mel.hpp"
#include "vove/metrics.hpp"
#include "vove/model.hpp"
#include "vove/pairs.hpp"
#include "vove/rng.hpp"
#include "vove/store.hpp"
#include "vove/wav.hpp"
