#pragma once

#include "pimcache/bench.hpp"
#include "pimcache/config.hpp"
#include "pimcache/core.hpp"
#include "pimcache/drm.hpp"
#include "pimcache/errors.hpp"
#include "pimcache/fingerprint.hpp"
#include "pimcache/parallel.hpp"
#include "pimcache/pim_sim.hpp"
#include "pimcache/vbyte.hpp"
#include "pimcache/workloads.hpp"
