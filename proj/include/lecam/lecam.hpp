#pragma once

#include "lecam/bottleneck.hpp"
#include "lecam/decision.hpp"
#include "lecam/deficiency.hpp"
#include "lecam/errors.hpp"
#include "lecam/features.hpp"
#include "lecam/information.hpp"
#include "lecam/kernel.hpp"
#include "lecam/random.hpp"
#include "lecam/simplex.hpp"
#include "lecam/space.hpp"
#include "lecam/verify.hpp"
