#pragma once

#include "errors.hpp"
#include "values.hpp"
#include "numerics.hpp"
#include "chain.hpp"
#include "winner.hpp"
#include "equilibrium.hpp"
#include "random.hpp"
#include "montecarlo.hpp"
#include "io.hpp"
#include "commands.hpp"
