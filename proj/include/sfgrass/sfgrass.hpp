#pragma once

#include "sfgrass/coarsen.hpp"
#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/linsolve.hpp"
#include "sfgrass/matrix_io.hpp"
#include "sfgrass/random.hpp"
#include "sfgrass/smoothing.hpp"
#include "sfgrass/sparsify.hpp"
#include "sfgrass/spectral_metrics.hpp"
