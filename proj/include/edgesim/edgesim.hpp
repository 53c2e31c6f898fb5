#pragma once

#include "edgesim/bridge.hpp"
#include "edgesim/comm.hpp"
#include "edgesim/config_io.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/env.hpp"
#include "edgesim/episode.hpp"
#include "edgesim/error.hpp"
#include "edgesim/metrics.hpp"
#include "edgesim/policies.hpp"
#include "edgesim/random.hpp"
#include "edgesim/reward.hpp"
#include "edgesim/sweep.hpp"
#include "edgesim/topology.hpp"
#include "edgesim/types.hpp"
#include "edgesim/validate.hpp"
#include "edgesim/workload.hpp"
