#pragma once

#include "butterfly/core/bfm.hpp"
#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"
#include "butterfly/core/png.hpp"
#include "butterfly/detectors/detector.hpp"
#include "butterfly/detectors/external.hpp"
#include "butterfly/detectors/protocol.hpp"
#include "butterfly/detectors/synthetic.hpp"
#include "butterfly/harness/config.hpp"
#include "butterfly/harness/fixture.hpp"
#include "butterfly/harness/render.hpp"
#include "butterfly/harness/run.hpp"
#include "butterfly/nsga2/archive.hpp"
#include "butterfly/nsga2/config.hpp"
#include "butterfly/nsga2/evolve.hpp"
#include "butterfly/nsga2/operators.hpp"
#include "butterfly/nsga2/rng.hpp"
#include "butterfly/nsga2/sorting.hpp"
#include "butterfly/objectives.hpp"
