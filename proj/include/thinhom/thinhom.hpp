#pragma once

#include "thinhom/error.hpp"
#include "thinhom/quadrature.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/regime.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/sparse.hpp"
#include "thinhom/assembly.hpp"
#include "thinhom/multigrid.hpp"
#include "thinhom/cellsolver.hpp"
#include "thinhom/coefficients.hpp"
#include "thinhom/homsolver.hpp"
#include "thinhom/unfolding.hpp"
#include "thinhom/direct3d.hpp"
#include "thinhom/commands.hpp"
