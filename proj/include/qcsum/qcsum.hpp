#pragma once

#include "qcsum/analysis.hpp"
#include "qcsum/chain.hpp"
#include "qcsum/cluster.hpp"
#include "qcsum/error.hpp"
#include "qcsum/force.hpp"
#include "qcsum/linalg.hpp"
#include "qcsum/mesh.hpp"
#include "qcsum/model.hpp"
#include "qcsum/potential.hpp"
#include "qcsum/solve.hpp"
