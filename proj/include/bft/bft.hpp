#pragma once

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/frame.hpp"
#include "bft/io.hpp"
#include "bft/learning.hpp"
#include "bft/netmodel.hpp"
#include "bft/population.hpp"
#include "bft/reasoning.hpp"
#include "bft/rng.hpp"
#include "bft/sampling.hpp"
