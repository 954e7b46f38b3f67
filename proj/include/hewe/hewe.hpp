#pragma once

#include "hewe/error.hpp"
#include "hewe/sample.hpp"
#include "hewe/hewe_process.hpp"
#include "hewe/limit_model.hpp"
#include "hewe/estimator.hpp"
#include "hewe/simulator.hpp"
#include "hewe/oracle.hpp"
#include "hewe/report.hpp"
