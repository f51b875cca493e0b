#pragma once

// Umbrella header for the rulepress prediction rule ensemble library.

#include "rulepress/common.hpp"
#include "rulepress/dataset.hpp"
#include "rulepress/design.hpp"
#include "rulepress/ensemble.hpp"
#include "rulepress/fit.hpp"
#include "rulepress/interpret.hpp"
#include "rulepress/parallel.hpp"
#include "rulepress/penreg.hpp"
#include "rulepress/rng.hpp"
#include "rulepress/rulegen.hpp"
#include "rulepress/tree.hpp"
#include "rulepress/validate.hpp"
