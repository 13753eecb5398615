#pragma once

#include "ercf/angular_momentum.hpp"
#include "ercf/cf_fitting.hpp"
#include "ercf/crystal_field.hpp"
#include "ercf/errors.hpp"
#include "ercf/half_int.hpp"
#include "ercf/io.hpp"
#include "ercf/jacobi.hpp"
#include "ercf/levmar.hpp"
#include "ercf/spectra.hpp"
#include "ercf/tensor_operators.hpp"
#include "ercf/units.hpp"
