#pragma once

#include "cannings.hpp"
#include "errors.hpp"
#include "genealogy.hpp"
#include "harness.hpp"
#include "limit.hpp"
#include "measures.hpp"
#include "newick.hpp"
#include "numeric.hpp"
#include "offspring.hpp"
#include "profiles.hpp"
#include "random.hpp"
#include "scenario.hpp"
#include "stats.hpp"
#include "text.hpp"
