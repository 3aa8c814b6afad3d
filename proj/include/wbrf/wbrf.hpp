#pragma once

// Umbrella header for the library (the HTTP service lives in service.hpp).

#include "wbrf/clustering.hpp"
#include "wbrf/color.hpp"
#include "wbrf/corrector.hpp"
#include "wbrf/datagen.hpp"
#include "wbrf/dataset.hpp"
#include "wbrf/error.hpp"
#include "wbrf/estimation.hpp"
#include "wbrf/evaluation.hpp"
#include "wbrf/fitting.hpp"
#include "wbrf/image_io.hpp"
#include "wbrf/metrics.hpp"
#include "wbrf/model.hpp"
#include "wbrf/trainer.hpp"
