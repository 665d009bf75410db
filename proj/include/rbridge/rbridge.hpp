#pragma once

// Umbrella header: the whole library.

#include "rbridge/core/coupling.hpp"
#include "rbridge/core/distribution.hpp"
#include "rbridge/core/error.hpp"
#include "rbridge/core/parallel.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/core/time_grid.hpp"

#include "rbridge/approximator.hpp"
#include "rbridge/eval.hpp"
#include "rbridge/filter.hpp"
#include "rbridge/gaussian_bridge.hpp"
#include "rbridge/levy_bridge.hpp"
#include "rbridge/posterior.hpp"
#include "rbridge/simulator.hpp"
