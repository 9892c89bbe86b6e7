#pragma once

// Umbrella header for the SING library: simultaneous non-Gaussian component
// analysis for one or two datasets measured on the same subjects.

#include "sing/errors.hpp"
#include "sing/io.hpp"
#include "sing/lngca.hpp"
#include "sing/matcher.hpp"
#include "sing/nongauss.hpp"
#include "sing/pipeline.hpp"
#include "sing/preprocess.hpp"
#include "sing/rng.hpp"
#include "sing/simgen.hpp"
#include "sing/sing_solver.hpp"
#include "sing/types.hpp"
#include "sing/version.hpp"
