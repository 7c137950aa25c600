#pragma once

#include "pso/distributions.hpp"
#include "pso/evaluation.hpp"
#include "pso/kernel_diag.hpp"
#include "pso/pso_instances.hpp"
#include "pso/rng.hpp"
#include "pso/runtime.hpp"
#include "pso/surface_model.hpp"
#include "pso/trainer.hpp"
#include "pso/types.hpp"
