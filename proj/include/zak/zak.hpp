#pragma once

#include "zak/config.hpp"
#include "zak/diagnostics.hpp"
#include "zak/evolve.hpp"
#include "zak/fitting.hpp"
#include "zak/grid.hpp"
#include "zak/io.hpp"
#include "zak/ode.hpp"
#include "zak/operators.hpp"
#include "zak/profiles.hpp"
#include "zak/profiles2d.hpp"
#include "zak/series.hpp"
#include "zak/state.hpp"
