#pragma once

// Umbrella header.

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/evalkit.hpp"
#include "rulegen/fairness.hpp"
#include "rulegen/lp.hpp"
#include "rulegen/model_io.hpp"
#include "rulegen/rug.hpp"
#include "rulegen/rules.hpp"
#include "rulegen/rux.hpp"
#include "rulegen/wtree.hpp"
