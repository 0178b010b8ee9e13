/*
 * Copyright 2026 The ppgtrans Authors.
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

// Umbrella header for the ppgtrans library.

#ifndef PPGTRANS_PPGTRANS_HPP_
#define PPGTRANS_PPGTRANS_HPP_

#include "ppgtrans/butterworth.hpp"
#include "ppgtrans/corpus.hpp"
#include "ppgtrans/dataset.hpp"
#include "ppgtrans/dtw.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/eval.hpp"
#include "ppgtrans/features.hpp"
#include "ppgtrans/gbdt.hpp"
#include "ppgtrans/hash.hpp"
#include "ppgtrans/io.hpp"
#include "ppgtrans/metrics.hpp"
#include "ppgtrans/quality.hpp"
#include "ppgtrans/savgol.hpp"
#include "ppgtrans/signal_core.hpp"
#include "ppgtrans/spectral.hpp"
#include "ppgtrans/stats.hpp"
#include "ppgtrans/stream.hpp"
#include "ppgtrans/synth.hpp"
#include "ppgtrans/types.hpp"

#endif  // PPGTRANS_PPGTRANS_HPP_
