#pragma once

#include "wishart/errors.hpp"
#include "wishart/tolerances.hpp"
#include "wishart/symmat.hpp"
#include "wishart/rational.hpp"
#include "wishart/polynomial.hpp"
#include "wishart/moments.hpp"
#include "wishart/gindikin.hpp"
#include "wishart/rng.hpp"
#include "wishart/parallel.hpp"
#include "wishart/sampler.hpp"
#include "wishart/sde.hpp"
#include "wishart/verify.hpp"
