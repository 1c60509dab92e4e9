#pragma once

#include "coord/beliefs.hpp"
#include "coord/engine.hpp"
#include "coord/error.hpp"
#include "coord/experiment.hpp"
#include "coord/game.hpp"
#include "coord/io.hpp"
#include "coord/mechanisms.hpp"
#include "coord/random.hpp"
#include "coord/schedule.hpp"
#include "coord/stats.hpp"
