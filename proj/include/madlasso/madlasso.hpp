#pragma once

// Umbrella header: adaptive ISTA with MAD thresholding, LASSO path and
// fixed-point analysis, matrix-recurrence convergence analysis, and the
// experiment harness.

#include "madlasso/candidate.hpp"
#include "madlasso/errors.hpp"
#include "madlasso/experiments.hpp"
#include "madlasso/io.hpp"
#include "madlasso/lasso_path.hpp"
#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"
#include "madlasso/recurrence.hpp"
#include "madlasso/solvers.hpp"
#include "madlasso/stability.hpp"
#include "madlasso/thresholding.hpp"
#include "madlasso/version.hpp"
