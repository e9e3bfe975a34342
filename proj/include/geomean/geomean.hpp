#pragma once

// Umbrella header.
#include "geomean/errors.hpp"
#include "geomean/field.hpp"
#include "geomean/rng.hpp"
#include "geomean/linalg.hpp"
#include "geomean/instance.hpp"
#include "geomean/special.hpp"
#include "geomean/sdp.hpp"
#include "geomean/rounding.hpp"
#include "geomean/sos.hpp"
#include "geomean/oracle.hpp"
#include "geomean/experiments.hpp"
