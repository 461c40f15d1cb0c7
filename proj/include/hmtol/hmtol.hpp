#ifndef HMTOL_HMTOL_HPP
#define HMTOL_HMTOL_HPP

#include "hmtol/random.hpp"
#include "hmtol/geometry.hpp"
#include "hmtol/cluster_tree.hpp"
#include "hmtol/tolerance.hpp"
#include "hmtol/lra.hpp"
#include "hmtol/norm_estimation.hpp"
#include "hmtol/hmatrix.hpp"
#include "hmtol/serialization.hpp"
#include "hmtol/bench.hpp"

#endif // HMTOL_HMTOL_HPP
