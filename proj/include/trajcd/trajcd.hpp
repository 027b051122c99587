#pragma once

#include "trajcd/basis.hpp"
#include "trajcd/coefficient_vector.hpp"
#include "trajcd/csv.hpp"
#include "trajcd/dataset.hpp"
#include "trajcd/error.hpp"
#include "trajcd/model.hpp"
#include "trajcd/model_io.hpp"
#include "trajcd/projection.hpp"
#include "trajcd/scoring.hpp"
#include "trajcd/synth.hpp"
