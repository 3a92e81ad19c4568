#pragma once

#include "bladescan/angle_estimator.hpp"
#include "bladescan/benchmark.hpp"
#include "bladescan/clustering.hpp"
#include "bladescan/error.hpp"
#include "bladescan/exposure.hpp"
#include "bladescan/geometry.hpp"
#include "bladescan/grid_map.hpp"
#include "bladescan/io.hpp"
#include "bladescan/scene_sim.hpp"
