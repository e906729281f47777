#pragma once

// Umbrella header for the repair library.

#include "skm/generators.hpp"
#include "skm/io.hpp"
#include "skm/jacobian.hpp"
#include "skm/nullspace.hpp"
#include "skm/oracle.hpp"
#include "skm/parallel.hpp"
#include "skm/pipeline.hpp"
#include "skm/solver.hpp"
#include "skm/types.hpp"
