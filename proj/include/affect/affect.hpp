#pragma once

#include "affect/baselines.hpp"
#include "affect/clusterer.hpp"
#include "affect/config.hpp"
#include "affect/core_model.hpp"
#include "affect/error.hpp"
#include "affect/evaluation.hpp"
#include "affect/experiment.hpp"
#include "affect/generators/boids.hpp"
#include "affect/generators/gmm.hpp"
#include "affect/hierarchical.hpp"
#include "affect/io.hpp"
#include "affect/kmeans.hpp"
#include "affect/linalg.hpp"
#include "affect/random.hpp"
#include "affect/spectral.hpp"
#include "affect/tracking.hpp"
