#pragma once

#include "wedgewar/errors.hpp"
#include "wedgewar/wedge_ode.hpp"
#include "wedgewar/profile.hpp"
#include "wedgewar/psolution.hpp"
#include "wedgewar/rng.hpp"
#include "wedgewar/game.hpp"
#include "wedgewar/montecarlo.hpp"
#include "wedgewar/config.hpp"
