#pragma once

#include "informa/core.hpp"
#include "informa/random.hpp"
#include "informa/trajectory.hpp"
#include "informa/data_matrices.hpp"
#include "informa/lifting.hpp"
#include "informa/feasible_set.hpp"
#include "informa/sdp_problem.hpp"
#include "informa/sdp_solver.hpp"
#include "informa/sdp_io.hpp"
#include "informa/synthesis.hpp"
#include "informa/verification.hpp"
#include "informa/experiments.hpp"
#include "informa/serialize.hpp"
