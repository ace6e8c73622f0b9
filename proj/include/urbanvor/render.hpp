#pragma once

#include "urbanvor/render/color.hpp"
#include "urbanvor/render/geojson.hpp"
#include "urbanvor/render/layer.hpp"
#include "urbanvor/render/svg.hpp"
