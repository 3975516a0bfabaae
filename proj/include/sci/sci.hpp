#pragma once

// umbrella header

#include "sci/bounds.hpp"
#include "sci/codebook.hpp"
#include "sci/concentration.hpp"
#include "sci/csv.hpp"
#include "sci/data_cube.hpp"
#include "sci/errors.hpp"
#include "sci/mask.hpp"
#include "sci/recover.hpp"
#include "sci/rng.hpp"
#include "sci/scit_io.hpp"
#include "sci/sensing.hpp"
#include "sci/svg.hpp"
#include "sci/sweep.hpp"
#include "sci/text.hpp"
