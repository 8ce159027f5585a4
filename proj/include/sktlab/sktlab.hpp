#pragma once

#include "sktlab/config.hpp"
#include "sktlab/dual_solver.hpp"
#include "sktlab/errors.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/kernel.hpp"
#include "sktlab/local_solver.hpp"
#include "sktlab/model.hpp"
#include "sktlab/nonlocal_op.hpp"
#include "sktlab/nonlocal_solver.hpp"
#include "sktlab/study.hpp"
#include "sktlab/trajectory.hpp"
