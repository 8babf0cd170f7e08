#pragma once

#include "flexdup/baselines.hpp"
#include "flexdup/channel.hpp"
#include "flexdup/harness.hpp"
#include "flexdup/interference.hpp"
#include "flexdup/io.hpp"
#include "flexdup/linalg.hpp"
#include "flexdup/rng.hpp"
#include "flexdup/scenario.hpp"
#include "flexdup/solvers.hpp"
