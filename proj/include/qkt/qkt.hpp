#pragma once

// Umbrella header: certified epsilon-r projections and unitaries on banded
// matrix algebras over finite metric spaces, polynomial polar decomposition,
// elementary-factor decompositions across a controlled cover pair, and the
// controlled odd-degree boundary map, with seeded replayable experiments.

#include "qkt/rational.hpp"
#include "qkt/errors.hpp"
#include "qkt/rng.hpp"
#include "qkt/metric_space.hpp"
#include "qkt/dense.hpp"
#include "qkt/jacobi.hpp"
#include "qkt/banded.hpp"
#include "qkt/support.hpp"
#include "qkt/quasi.hpp"
#include "qkt/polar.hpp"
#include "qkt/elementary.hpp"
#include "qkt/mv_pair.hpp"
#include "qkt/factorization.hpp"
#include "qkt/boundary.hpp"
#include "qkt/generators.hpp"
#include "qkt/serialize.hpp"
#include "qkt/experiments.hpp"
