#pragma once

#include "invpress/admissible.hpp"
#include "invpress/control_set.hpp"
#include "invpress/errors.hpp"
#include "invpress/io.hpp"
#include "invpress/numerics.hpp"
#include "invpress/oracle.hpp"
#include "invpress/potential.hpp"
#include "invpress/pressure.hpp"
#include "invpress/region.hpp"
#include "invpress/setcover.hpp"
#include "invpress/spanning.hpp"
#include "invpress/system.hpp"
#include "invpress/verify.hpp"
