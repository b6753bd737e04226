#pragma once

#include "chaosgeo/classical.hpp"
#include "chaosgeo/experiment.hpp"
#include "chaosgeo/generators.hpp"
#include "chaosgeo/geometry.hpp"
#include "chaosgeo/hamiltonian.hpp"
#include "chaosgeo/io.hpp"
#include "chaosgeo/linalg.hpp"
#include "chaosgeo/otoc.hpp"
#include "chaosgeo/response.hpp"
