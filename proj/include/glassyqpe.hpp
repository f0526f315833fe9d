#pragma once

#include "glassyqpe/analysis.hpp"
#include "glassyqpe/asymptotics.hpp"
#include "glassyqpe/disorder.hpp"
#include "glassyqpe/error.hpp"
#include "glassyqpe/montecarlo.hpp"
#include "glassyqpe/oracle.hpp"
#include "glassyqpe/qpe.hpp"
#include "glassyqpe/rng.hpp"
#include "glassyqpe/sphere.hpp"
#include "glassyqpe/validation.hpp"
#include "glassyqpe/csv.hpp"
