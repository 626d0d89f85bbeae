#pragma once

#include "descent.hpp"
#include "disk_mesh.hpp"
#include "experiments.hpp"
#include "fem.hpp"
#include "optimizer.hpp"
#include "periodic_linear.hpp"
#include "quadrature.hpp"
#include "radial_shape.hpp"
#include "shape_gradient.hpp"
