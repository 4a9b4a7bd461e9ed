// Umbrella header.

#pragma once

#include "hhj/complex_lab.hpp"
#include "hhj/fem.hpp"
#include "hhj/linalg.hpp"
#include "hhj/mesh.hpp"
#include "hhj/multigrid.hpp"
#include "hhj/pipeline.hpp"
#include "hhj/quadrature.hpp"
#include "hhj/tensor.hpp"
