#pragma once

#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/wavelet.hpp"
#include "sarhcox/sarh.hpp"
#include "sarhcox/spectral.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/cox.hpp"
#include "sarhcox/predict.hpp"
#include "sarhcox/field_io.hpp"
#include "sarhcox/ingest.hpp"
#include "sarhcox/experiment.hpp"
#include "sarhcox/config.hpp"
