#pragma once

#include "dprp/aircomp.hpp"
#include "dprp/allocator.hpp"
#include "dprp/config.hpp"
#include "dprp/convergence.hpp"
#include "dprp/csv.hpp"
#include "dprp/privacy.hpp"
#include "dprp/projection.hpp"
#include "dprp/rng.hpp"
#include "dprp/sweeps.hpp"
#include "dprp/trainer.hpp"
#include "dprp/verification.hpp"
