#pragma once

// Umbrella header for the multilevel Monte Carlo library.

#include "mlmc/analysis.hpp"
#include "mlmc/config.hpp"
#include "mlmc/errors.hpp"
#include "mlmc/estimator.hpp"
#include "mlmc/grid.hpp"
#include "mlmc/io.hpp"
#include "mlmc/matrix.hpp"
#include "mlmc/parallel.hpp"
#include "mlmc/problems.hpp"
#include "mlmc/rng.hpp"
#include "mlmc/scheme.hpp"
#include "mlmc/sde.hpp"
#include "mlmc/truncation.hpp"
