#pragma once

#include "gradgap/linalg.hpp"
#include "gradgap/trajectory.hpp"
#include "gradgap/token.hpp"
#include "gradgap/updates.hpp"
#include "gradgap/diagnostics.hpp"
#include "gradgap/counterexamples.hpp"
#include "gradgap/random.hpp"
#include "gradgap/experiments.hpp"
#include "gradgap/suites.hpp"
#include "gradgap/io.hpp"
