#pragma once

#include "kp_rankone/baker.hpp"
#include "kp_rankone/cases.hpp"
#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/rng.hpp"
#include "kp_rankone/scaled_complex.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/triple.hpp"
#include "kp_rankone/verify.hpp"
