#pragma once

#include "emmkit/error.hpp"
#include "emmkit/time_function.hpp"
#include "emmkit/quadrature.hpp"
#include "emmkit/model.hpp"
#include "emmkit/emm.hpp"
#include "emmkit/mpr.hpp"
#include "emmkit/reduction.hpp"
#include "emmkit/uplift.hpp"
#include "emmkit/rng.hpp"
#include "emmkit/parallel.hpp"
#include "emmkit/stochastic.hpp"
#include "emmkit/projection.hpp"
#include "emmkit/pricing.hpp"
#include "emmkit/json_io.hpp"
#include "emmkit/verify.hpp"
