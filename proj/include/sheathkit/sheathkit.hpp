#pragma once

#include "sheathkit/config.hpp"
#include "sheathkit/diagnostics.hpp"
#include "sheathkit/distributions.hpp"
#include "sheathkit/errors.hpp"
#include "sheathkit/experiments.hpp"
#include "sheathkit/field.hpp"
#include "sheathkit/poisson.hpp"
#include "sheathkit/quadrature.hpp"
#include "sheathkit/stationary.hpp"
#include "sheathkit/vlasov.hpp"
