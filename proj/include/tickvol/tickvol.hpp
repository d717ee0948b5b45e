#pragma once

#include "tickvol/calendar.hpp"
#include "tickvol/diagnose.hpp"
#include "tickvol/dist.hpp"
#include "tickvol/diurnal.hpp"
#include "tickvol/dynamics.hpp"
#include "tickvol/error.hpp"
#include "tickvol/estimate.hpp"
#include "tickvol/io.hpp"
#include "tickvol/model.hpp"
#include "tickvol/optimize.hpp"
#include "tickvol/parallel.hpp"
#include "tickvol/pipeline.hpp"
#include "tickvol/random.hpp"
#include "tickvol/residuals.hpp"
#include "tickvol/series.hpp"
#include "tickvol/sim.hpp"
#include "tickvol/special.hpp"
