#pragma once

#include "kerrsq/channels.hpp"
#include "kerrsq/coherent.hpp"
#include "kerrsq/error.hpp"
#include "kerrsq/exotic_states.hpp"
#include "kerrsq/gaussian.hpp"
#include "kerrsq/harness.hpp"
#include "kerrsq/heterodyne.hpp"
#include "kerrsq/kerr_state.hpp"
#include "kerrsq/parameters.hpp"
#include "kerrsq/photon_stats.hpp"
#include "kerrsq/selftest.hpp"
