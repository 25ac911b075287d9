#pragma once

// Umbrella header.
#include "tlx/dimensions.hpp"
#include "tlx/error.hpp"
#include "tlx/json_io.hpp"
#include "tlx/metrics.hpp"
#include "tlx/numeric.hpp"
#include "tlx/profile.hpp"
#include "tlx/report.hpp"
#include "tlx/scoring.hpp"
#include "tlx/service.hpp"
#include "tlx/simulate.hpp"
#include "tlx/study_store.hpp"
#include "tlx/telemetry.hpp"
