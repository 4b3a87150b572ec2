#pragma once

// Umbrella header: the whole library in one include.

#include "mgsim/cli.hpp"
#include "mgsim/dac.hpp"
#include "mgsim/device.hpp"
#include "mgsim/engine.hpp"
#include "mgsim/event.hpp"
#include "mgsim/network.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/secondary.hpp"
#include "mgsim/trace.hpp"
