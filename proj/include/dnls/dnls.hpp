#pragma once

#include "core.hpp"
#include "diffcalc.hpp"
#include "models.hpp"
#include "reduction.hpp"
#include "epsilon_engine.hpp"
#include "verify.hpp"
#include "simulate.hpp"
#include "io.hpp"
