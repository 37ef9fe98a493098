#pragma once

// Umbrella header for the collateral library.

#include "collateral/annotation_io.hpp"
#include "collateral/baseline.hpp"
#include "collateral/cli.hpp"
#include "collateral/dsp.hpp"
#include "collateral/error.hpp"
#include "collateral/frame_matrix.hpp"
#include "collateral/logging.hpp"
#include "collateral/manifest.hpp"
#include "collateral/metrics.hpp"
#include "collateral/pipeline.hpp"
#include "collateral/span_features.hpp"
#include "collateral/svg_chart.hpp"
#include "collateral/timeline.hpp"
#include "collateral/util.hpp"
#include "collateral/version.hpp"
#include "collateral/wav.hpp"
#include "collateral/word_features.hpp"
