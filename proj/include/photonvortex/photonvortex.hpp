#pragma once

#include "grid.hpp"
#include "hermite.hpp"
#include "mode_basis.hpp"
#include "rates.hpp"
#include "pump.hpp"
#include "dynamics.hpp"
#include "integrator.hpp"
#include "observables.hpp"
#include "peaks.hpp"
#include "config.hpp"
#include "io.hpp"
#include "experiment.hpp"
