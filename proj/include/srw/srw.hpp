#pragma once

#include "srw/analysis.hpp"
#include "srw/cluster_eom.hpp"
#include "srw/core_model.hpp"
#include "srw/dicke_algebra.hpp"
#include "srw/errors.hpp"
#include "srw/exact_lindblad.hpp"
#include "srw/extrema.hpp"
#include "srw/observables.hpp"
#include "srw/ode.hpp"
#include "srw/parallel.hpp"
#include "srw/version.hpp"
#include "srw/scenario.hpp"
