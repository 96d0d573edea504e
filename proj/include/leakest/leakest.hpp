#pragma once

#include "leakest/bounds.hpp"
#include "leakest/common.hpp"
#include "leakest/gaussian.hpp"
#include "leakest/harness.hpp"
#include "leakest/hist_divergence.hpp"
#include "leakest/histogram.hpp"
#include "leakest/knn.hpp"
#include "leakest/mmd.hpp"
#include "leakest/oracles.hpp"
#include "leakest/rng.hpp"
#include "leakest/scenarios.hpp"
#include "leakest/transport.hpp"
