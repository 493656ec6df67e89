// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "phisob/error.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"
#include "phisob/field.hpp"
#include "phisob/measure.hpp"
#include "phisob/functionals.hpp"
#include "phisob/report.hpp"
#include "phisob/semigroup.hpp"
#include "phisob/verify.hpp"
#include "phisob/concentration.hpp"
#include "phisob/maxent.hpp"
#include "phisob/config.hpp"
#include "phisob/io.hpp"
#include "phisob/cli.hpp"
