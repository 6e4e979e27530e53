#pragma once

#include "odnoise/error.hpp"
#include "odnoise/od_core.hpp"
#include "odnoise/rng.hpp"
#include "odnoise/noise.hpp"
#include "odnoise/synth.hpp"
#include "odnoise/experiment.hpp"
#include "odnoise/regress.hpp"
#include "odnoise/io.hpp"
#include "odnoise/report.hpp"
