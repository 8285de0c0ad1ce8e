#pragma once

// Umbrella header for the radial cubic-quintic NLS toolkit.

#include "cqnls/config.hpp"
#include "cqnls/dynamics.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/experiments.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"
#include "cqnls/io.hpp"
#include "cqnls/modulation.hpp"
#include "cqnls/virial.hpp"
