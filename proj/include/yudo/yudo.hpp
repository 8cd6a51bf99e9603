#pragma once

#include "yudo/domain.hpp"
#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/kernel_constants.hpp"
#include "yudo/kernels.hpp"
#include "yudo/norms.hpp"
#include "yudo/numeric.hpp"
#include "yudo/solver.hpp"
#include "yudo/uniqueness.hpp"
#include "yudo/velocity.hpp"
