/* Copyright 2026 The colordec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Umbrella header for the colordec library.

#ifndef COLORDEC_COLORDEC_HPP_
#define COLORDEC_COLORDEC_HPP_

#include "colordec/colored_lexicon.hpp"
#include "colordec/common.hpp"
#include "colordec/corpus_io.hpp"
#include "colordec/ctc_decoder.hpp"
#include "colordec/eval.hpp"
#include "colordec/fusion_scorers.hpp"
#include "colordec/metrics.hpp"
#include "colordec/ngram_lm.hpp"
#include "colordec/oracle.hpp"
#include "colordec/synth.hpp"

#endif  // COLORDEC_COLORDEC_HPP_
