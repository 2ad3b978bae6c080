#pragma once

#include "levyot/transport/control.hpp"
#include "levyot/transport/cost.hpp"
#include "levyot/transport/dual.hpp"
#include "levyot/transport/grid.hpp"
#include "levyot/transport/hjb.hpp"
#include "levyot/transport/instance.hpp"
#include "levyot/transport/marginal.hpp"
#include "levyot/transport/optimize.hpp"
#include "levyot/transport/primal.hpp"
#include "levyot/transport/report.hpp"
