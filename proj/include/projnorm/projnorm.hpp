#pragma once

#include "projnorm/certify.hpp"
#include "projnorm/covering.hpp"
#include "projnorm/errors.hpp"
#include "projnorm/io.hpp"
#include "projnorm/lp_model.hpp"
#include "projnorm/lp_solver.hpp"
#include "projnorm/oracles.hpp"
#include "projnorm/tensor.hpp"
