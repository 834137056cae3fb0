#pragma once

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/experiment.hpp"
#include "blocksid/io.hpp"
#include "blocksid/lti.hpp"
#include "blocksid/metrics.hpp"
#include "blocksid/prox.hpp"
#include "blocksid/random.hpp"
#include "blocksid/solver.hpp"
#include "blocksid/theory.hpp"
