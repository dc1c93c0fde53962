#pragma once

// Umbrella header for the whole toolkit.

#include "gmner/characterize.hpp"
#include "gmner/config.hpp"
#include "gmner/databuilder.hpp"
#include "gmner/dataset.hpp"
#include "gmner/error.hpp"
#include "gmner/geometry.hpp"
#include "gmner/grbp.hpp"
#include "gmner/oracle.hpp"
#include "gmner/random.hpp"
#include "gmner/records.hpp"
#include "gmner/report.hpp"
#include "gmner/schema.hpp"
#include "gmner/scoring.hpp"
#include "gmner/version.hpp"
