#pragma once

#include "overlap_lab/config.hpp"
#include "overlap_lab/csv.hpp"
#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/errors.hpp"
#include "overlap_lab/experiments.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/rng.hpp"
#include "overlap_lab/run.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/statistics.hpp"
#include "overlap_lab/triangular.hpp"
#include "overlap_lab/triangular_storage.hpp"
#include "overlap_lab/validators.hpp"
