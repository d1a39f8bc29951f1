#pragma once

#include "expfdr/adaptive_bh.hpp"
#include "expfdr/analysis.hpp"
#include "expfdr/distributions.hpp"
#include "expfdr/error.hpp"
#include "expfdr/estimators.hpp"
#include "expfdr/io.hpp"
#include "expfdr/lrt.hpp"
#include "expfdr/quadrature.hpp"
#include "expfdr/random.hpp"
#include "expfdr/report.hpp"
#include "expfdr/simulation.hpp"
#include "expfdr/special_functions.hpp"
