#pragma once

// Umbrella header.

#include "mcz/common.hpp"
#include "mcz/errors.hpp"
#include "mcz/grid.hpp"
#include "mcz/serialize.hpp"
#include "mcz/dyadic.hpp"
#include "mcz/maximal.hpp"
#include "mcz/kernel.hpp"
#include "mcz/measure.hpp"
#include "mcz/apply.hpp"
#include "mcz/decomposition.hpp"
#include "mcz/verify.hpp"
#include "mcz/parallel.hpp"
