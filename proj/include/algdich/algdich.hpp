#pragma once

// Everything. runner.hpp and config.hpp also pull in vendor/json.hpp.

#include "algdich/types.hpp"
#include "algdich/errors.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/ode.hpp"
#include "algdich/quadrature.hpp"
#include "algdich/evolution.hpp"
#include "algdich/dichotomy.hpp"
#include "algdich/problem.hpp"
#include "algdich/flows.hpp"
#include "algdich/conjugacy.hpp"
#include "algdich/scenarios.hpp"
#include "algdich/analysis.hpp"
#include "algdich/expression.hpp"
#include "algdich/config.hpp"
#include "algdich/runner.hpp"
