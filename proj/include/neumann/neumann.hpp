#pragma once

#include "geometry.hpp"
#include "specfun.hpp"
#include "eigenmodel.hpp"
#include "parallel.hpp"
#include "ode.hpp"
#include "critical.hpp"
#include "flow.hpp"
#include "asymptotics.hpp"
#include "partition.hpp"
