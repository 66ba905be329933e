#pragma once

#include "boostlab/boosting.hpp"
#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"
#include "boostlab/errors.hpp"
#include "boostlab/experiment.hpp"
#include "boostlab/learners.hpp"
#include "boostlab/linalg.hpp"
#include "boostlab/random.hpp"
#include "boostlab/stochastic.hpp"
