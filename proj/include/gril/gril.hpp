#pragma once

#include "gril/augment.hpp"
#include "gril/coordinate_descent.hpp"
#include "gril/data.hpp"
#include "gril/error.hpp"
#include "gril/fit.hpp"
#include "gril/io.hpp"
#include "gril/lars.hpp"
#include "gril/penalty.hpp"
#include "gril/rng.hpp"
#include "gril/simulation.hpp"
#include "gril/theory.hpp"
#include "gril/tuning.hpp"
#include "gril/weights.hpp"
