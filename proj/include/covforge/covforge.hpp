#pragma once

// Everything except covforge/io.hpp, which additionally needs nlohmann/json.

#include "covforge/completion.hpp"
#include "covforge/continuity.hpp"
#include "covforge/displacement.hpp"
#include "covforge/electrodynamics.hpp"
#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinematics.hpp"
#include "covforge/kinetics.hpp"
#include "covforge/levi_civita.hpp"
#include "covforge/linalg.hpp"
#include "covforge/parallel.hpp"
#include "covforge/plasma.hpp"
#include "covforge/quadrature.hpp"
#include "covforge/scalar_function.hpp"
#include "covforge/seeds.hpp"
