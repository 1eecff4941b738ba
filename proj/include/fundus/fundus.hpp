#pragma once

#include "fundus/bayes.hpp"
#include "fundus/config.hpp"
#include "fundus/error.hpp"
#include "fundus/eval.hpp"
#include "fundus/features.hpp"
#include "fundus/grid.hpp"
#include "fundus/image.hpp"
#include "fundus/manifest.hpp"
#include "fundus/netpbm.hpp"
#include "fundus/prefilter.hpp"
#include "fundus/preprocess.hpp"
#include "fundus/report.hpp"
#include "fundus/rng.hpp"
#include "fundus/selection.hpp"
#include "fundus/synth.hpp"
