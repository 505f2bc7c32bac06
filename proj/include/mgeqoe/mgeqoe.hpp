#pragma once

#include "mgeqoe/core.hpp"
#include "mgeqoe/elements.hpp"
#include "mgeqoe/ephemeris.hpp"
#include "mgeqoe/error.hpp"
#include "mgeqoe/forces.hpp"
#include "mgeqoe/io.hpp"
#include "mgeqoe/parallel.hpp"
#include "mgeqoe/pipeline.hpp"
#include "mgeqoe/propagation.hpp"
#include "mgeqoe/scenario.hpp"
#include "mgeqoe/trajectory.hpp"
#include "mgeqoe/uncertainty.hpp"
