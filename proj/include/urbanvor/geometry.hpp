#pragma once

#include "urbanvor/geometry/delaunay.hpp"
#include "urbanvor/geometry/polygon.hpp"
#include "urbanvor/geometry/predicates.hpp"
#include "urbanvor/geometry/types.hpp"
#include "urbanvor/geometry/voronoi.hpp"
