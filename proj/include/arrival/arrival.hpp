#pragma once

#include "arrival/survival.hpp"
#include "arrival/event_grid.hpp"
#include "arrival/features.hpp"
#include "arrival/rng.hpp"
#include "arrival/tensor.hpp"
#include "arrival/neural.hpp"
#include "arrival/model.hpp"
#include "arrival/metrics.hpp"
#include "arrival/datagen.hpp"
#include "arrival/io.hpp"
#include "arrival/pipeline.hpp"
#include "arrival/cli.hpp"
