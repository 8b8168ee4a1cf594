#pragma once

#include "navsort/criterion.hpp"
#include "navsort/dataset_io.hpp"
#include "navsort/errors.hpp"
#include "navsort/evalharness.hpp"
#include "navsort/imgcore.hpp"
#include "navsort/matcher.hpp"
#include "navsort/parallel.hpp"
#include "navsort/phantom.hpp"
#include "navsort/reconstructor.hpp"
#include "navsort/tracker.hpp"
