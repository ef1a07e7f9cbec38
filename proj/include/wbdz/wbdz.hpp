#pragma once

#include "model.hpp"
#include "parser.hpp"
#include "analysis.hpp"
#include "solver.hpp"
#include "engine.hpp"
#include "oracle.hpp"
#include "tm.hpp"
