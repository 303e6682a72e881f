// Umbrella header for the robust local Gaussian process library.

#pragma once

#include "rlgp/cli.hpp"
#include "rlgp/csv.hpp"
#include "rlgp/errors.hpp"
#include "rlgp/estimator.hpp"
#include "rlgp/kernel.hpp"
#include "rlgp/neighborhood.hpp"
#include "rlgp/predictor.hpp"
#include "rlgp/rng.hpp"
#include "rlgp/synthbench.hpp"
