// Convenience umbrella header.
#pragma once

#include "spcd/augment.hpp"
#include "spcd/classifier.hpp"
#include "spcd/csv.hpp"
#include "spcd/evaluation.hpp"
#include "spcd/features.hpp"
#include "spcd/image.hpp"
#include "spcd/image_io.hpp"
#include "spcd/manifest.hpp"
#include "spcd/mlp.hpp"
#include "spcd/model.hpp"
#include "spcd/naive_bayes.hpp"
#include "spcd/pipeline.hpp"
#include "spcd/random_forest.hpp"
#include "spcd/rng.hpp"
#include "spcd/slic.hpp"
