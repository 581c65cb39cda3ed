#pragma once

// Umbrella header.

#include "netdyn/acf.hpp"
#include "netdyn/architecture.hpp"
#include "netdyn/data_io.hpp"
#include "netdyn/dataset.hpp"
#include "netdyn/diagnostics.hpp"
#include "netdyn/distance.hpp"
#include "netdyn/error.hpp"
#include "netdyn/experiment.hpp"
#include "netdyn/gd.hpp"
#include "netdyn/kantz.hpp"
#include "netdyn/lyapunov.hpp"
#include "netdyn/network.hpp"
#include "netdyn/parallel.hpp"
#include "netdyn/perturbation.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/segments.hpp"
#include "netdyn/stats.hpp"
#include "netdyn/trajectory_io.hpp"
#include "netdyn/weights.hpp"
