#pragma once

#include "todo/attention.hpp"
#include "todo/bench.hpp"
#include "todo/counters.hpp"
#include "todo/error.hpp"
#include "todo/grid.hpp"
#include "todo/kernels.hpp"
#include "todo/metrics.hpp"
#include "todo/tgrd.hpp"
#include "todo/tome.hpp"
