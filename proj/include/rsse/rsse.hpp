#pragma once

#include "csv.hpp"
#include "density.hpp"
#include "design.hpp"
#include "divergence.hpp"
#include "entropy.hpp"
#include "error.hpp"
#include "kernels.hpp"
#include "parent.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "simlab.hpp"
#include "theory.hpp"
