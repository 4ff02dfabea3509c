#pragma once

#include "mitk/counterexample.hpp"
#include "mitk/discrete.hpp"
#include "mitk/double_double.hpp"
#include "mitk/errors.hpp"
#include "mitk/gauss_hermite.hpp"
#include "mitk/gaussian.hpp"
#include "mitk/numeric.hpp"
#include "mitk/sbm.hpp"
#include "mitk/verify.hpp"
