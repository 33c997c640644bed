#pragma once

#include "stealth_lqr/analysis.hpp"
#include "stealth_lqr/bound.hpp"
#include "stealth_lqr/detector.hpp"
#include "stealth_lqr/model.hpp"
#include "stealth_lqr/presets.hpp"
#include "stealth_lqr/search.hpp"
#include "stealth_lqr/sim.hpp"
#include "stealth_lqr/solver.hpp"
