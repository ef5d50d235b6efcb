#pragma once

// Umbrella header for the archweave toolkit.

#include "archweave/actions.hpp"
#include "archweave/condition.hpp"
#include "archweave/diag.hpp"
#include "archweave/emit.hpp"
#include "archweave/model.hpp"
#include "archweave/parser.hpp"
#include "archweave/pattern.hpp"
#include "archweave/patterns.hpp"
#include "archweave/pipeline.hpp"
#include "archweave/planner.hpp"
#include "archweave/refine.hpp"
#include "archweave/render.hpp"
#include "archweave/sim.hpp"
#include "archweave/units.hpp"
