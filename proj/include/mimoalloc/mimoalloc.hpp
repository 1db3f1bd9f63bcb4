#pragma once

#include "mimoalloc/bitalloc.hpp"
#include "mimoalloc/channel.hpp"
#include "mimoalloc/config.hpp"
#include "mimoalloc/errors.hpp"
#include "mimoalloc/numerics.hpp"
#include "mimoalloc/parallel.hpp"
#include "mimoalloc/power.hpp"
#include "mimoalloc/qam.hpp"
#include "mimoalloc/qam_plan.hpp"
#include "mimoalloc/report.hpp"
#include "mimoalloc/sim.hpp"
#include "mimoalloc/version.hpp"
