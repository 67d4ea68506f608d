#pragma once

#include "ffalign/version.hpp"
#include "ffalign/units.hpp"
#include "ffalign/angular.hpp"
#include "ffalign/quadrature.hpp"
#include "ffalign/dop853.hpp"
#include "ffalign/trace.hpp"
#include "ffalign/propagator.hpp"
#include "ffalign/ensemble.hpp"
#include "ffalign/signal.hpp"
#include "ffalign/superposition.hpp"
#include "ffalign/config.hpp"
#include "ffalign/csv.hpp"
#include "ffalign/pipeline.hpp"
