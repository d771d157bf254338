#pragma once

#include "prefarb/backtest.hpp"
#include "prefarb/bootstrap.hpp"
#include "prefarb/errors.hpp"
#include "prefarb/estimator_lab.hpp"
#include "prefarb/market_data.hpp"
#include "prefarb/portfolio.hpp"
#include "prefarb/potential_method.hpp"
#include "prefarb/preference_graph.hpp"
#include "prefarb/preference_signal.hpp"
#include "prefarb/regression.hpp"
#include "prefarb/statistics.hpp"
