// Umbrella header.
#pragma once

#include "curvislice/core.hpp"
#include "curvislice/field.hpp"
#include "curvislice/ode.hpp"
#include "curvislice/geodesics.hpp"
#include "curvislice/parallel.hpp"
#include "curvislice/projections.hpp"
#include "curvislice/gridfield.hpp"
#include "curvislice/bv1d.hpp"
#include "curvislice/symgrad.hpp"
#include "curvislice/manifold.hpp"
#include "curvislice/io.hpp"
