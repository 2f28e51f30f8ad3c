#pragma once

#include "maxstable/basis.hpp"
#include "maxstable/csv.hpp"
#include "maxstable/data.hpp"
#include "maxstable/dependence.hpp"
#include "maxstable/errors.hpp"
#include "maxstable/fit.hpp"
#include "maxstable/geo.hpp"
#include "maxstable/io.hpp"
#include "maxstable/marginals.hpp"
#include "maxstable/matrix.hpp"
#include "maxstable/models.hpp"
#include "maxstable/optimize.hpp"
#include "maxstable/parallel.hpp"
#include "maxstable/random.hpp"
#include "maxstable/simulation.hpp"
#include "maxstable/stats.hpp"
#include "maxstable/synth.hpp"
