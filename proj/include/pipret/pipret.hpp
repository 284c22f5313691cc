#pragma once

#include "pipret/errors.hpp"
#include "pipret/field.hpp"
#include "pipret/parallel.hpp"
#include "pipret/capacity.hpp"
#include "pipret/markov.hpp"
#include "pipret/retrieval.hpp"
#include "pipret/gram_ml.hpp"
#include "pipret/pipeline.hpp"
