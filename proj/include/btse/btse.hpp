// Copyright 2026 The BTSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#ifndef BTSE_BTSE_HPP_
#define BTSE_BTSE_HPP_

#include "btse/errors.hpp"
#include "btse/io/loudness.hpp"
#include "btse/io/resample.hpp"
#include "btse/io/wav.hpp"
#include "btse/metrics.hpp"
#include "btse/net/config.hpp"
#include "btse/net/model.hpp"
#include "btse/net/weights.hpp"
#include "btse/ontology.hpp"
#include "btse/signal.hpp"
#include "btse/streaming.hpp"
#include "btse/synth/convolution.hpp"
#include "btse/synth/scene.hpp"

namespace btse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace btse

#endif  // BTSE_BTSE_HPP_
