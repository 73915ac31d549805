#pragma once

// Umbrella header: exact martingale/coboundary engine for products of
// one-sided shifts. Pull in just the pieces you need for faster builds.

#include "check.hpp"
#include "decomposition.hpp"
#include "io.hpp"
#include "operators.hpp"
#include "poisson.hpp"
#include "rng.hpp"
#include "statistics.hpp"
