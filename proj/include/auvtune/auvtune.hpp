#pragma once

#include "auvtune/errors.hpp"
#include "auvtune/plant.hpp"
#include "auvtune/fuzzy.hpp"
#include "auvtune/controller.hpp"
#include "auvtune/simloop.hpp"
#include "auvtune/metrics.hpp"
#include "auvtune/pso.hpp"
#include "auvtune/config.hpp"
#include "auvtune/app.hpp"
