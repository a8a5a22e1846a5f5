#pragma once

// Link-level simulation of telegram-splitting LPWAN transmission under
// bursty interference: Markov-chain MAP detectors (full-state, reduced-state,
// scalable/blind), baselines, and the effective-SINR performance model.

#include "tsim/detector.hpp"
#include "tsim/fec.hpp"
#include "tsim/harness.hpp"
#include "tsim/interference.hpp"
#include "tsim/markov.hpp"
#include "tsim/perf.hpp"
#include "tsim/rng.hpp"
#include "tsim/scalable.hpp"
#include "tsim/telegram.hpp"
