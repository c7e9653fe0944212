#pragma once

#include "rdmd/types.hpp"
#include "rdmd/rng.hpp"
#include "rdmd/linalg.hpp"
#include "rdmd/rds_sim.hpp"
#include "rdmd/observables.hpp"
#include "rdmd/dmd.hpp"
#include "rdmd/spectrum_harness.hpp"
#include "rdmd/presets.hpp"
