#pragma once

#include "bsl/error.hpp"
#include "bsl/quadrature.hpp"
#include "bsl/domains.hpp"
#include "bsl/metrics.hpp"
#include "bsl/models.hpp"
#include "bsl/bayes.hpp"
#include "bsl/bounds.hpp"
#include "bsl/reduction.hpp"
#include "bsl/onlinevi.hpp"
#include "bsl/emit.hpp"
#include "bsl/parallel.hpp"
#include "bsl/harness.hpp"
