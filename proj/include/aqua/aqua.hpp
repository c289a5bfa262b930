#pragma once

#include "aqua/distortions.hpp"
#include "aqua/error.hpp"
#include "aqua/features.hpp"
#include "aqua/filter.hpp"
#include "aqua/image.hpp"
#include "aqua/image_io.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/labeling.hpp"
#include "aqua/manifest.hpp"
#include "aqua/mlp.hpp"
#include "aqua/opinion.hpp"
#include "aqua/parallel.hpp"
#include "aqua/records.hpp"
#include "aqua/reports.hpp"
#include "aqua/rng.hpp"
#include "aqua/stats.hpp"
#include "aqua/surrogate.hpp"
#include "aqua/textures.hpp"
