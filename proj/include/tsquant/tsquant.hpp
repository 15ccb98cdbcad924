#pragma once

#include "tsquant/error.hpp"
#include "tsquant/metrics.hpp"
#include "tsquant/numeric.hpp"
#include "tsquant/oracle.hpp"
#include "tsquant/quantizer.hpp"
#include "tsquant/scaling.hpp"
#include "tsquant/serialization.hpp"
#include "tsquant/series.hpp"
#include "tsquant/sweep.hpp"
#include "tsquant/version.hpp"
