#pragma once

#include "thermforge/calibrate.hpp"
#include "thermforge/enhance.hpp"
#include "thermforge/errors.hpp"
#include "thermforge/image.hpp"
#include "thermforge/matching.hpp"
#include "thermforge/metrics.hpp"
#include "thermforge/nelder_mead.hpp"
#include "thermforge/pipeline.hpp"
#include "thermforge/pnm.hpp"
#include "thermforge/radiometry.hpp"
#include "thermforge/rng.hpp"
#include "thermforge/serialize.hpp"
#include "thermforge/synthetic.hpp"
