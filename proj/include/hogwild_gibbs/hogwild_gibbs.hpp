#pragma once

#include "async.hpp"
#include "bounds.hpp"
#include "coupling.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "hardware.hpp"
#include "model.hpp"
#include "model_io.hpp"
#include "multilinear.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"
