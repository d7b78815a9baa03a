#pragma once

#include "darap/autodiff.hpp"
#include "darap/bench.hpp"
#include "darap/csv_io.hpp"
#include "darap/deform.hpp"
#include "darap/errors.hpp"
#include "darap/mesh.hpp"
#include "darap/metrics.hpp"
#include "darap/obj_io.hpp"
#include "darap/operators.hpp"
#include "darap/stylize.hpp"
#include "darap/validate.hpp"
