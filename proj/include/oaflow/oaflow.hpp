#pragma once

#include "oaflow/analysis.hpp"
#include "oaflow/errors.hpp"
#include "oaflow/flow.hpp"
#include "oaflow/io.hpp"
#include "oaflow/orlicz.hpp"
#include "oaflow/quadrature.hpp"
#include "oaflow/sphere_geometry.hpp"
