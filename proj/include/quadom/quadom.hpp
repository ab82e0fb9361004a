#pragma once

// Quadratic optomechanics in the pair-operator basis: derived couplings,
// steady-state populations, linearized drift/noise dynamics with eigenvalue
// stability, output spectral densities with and without the momentum-momentum
// interaction, and a truncated-Fock-space verification oracle.

#include "commands.hpp"
#include "config.hpp"
#include "constants.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "model.hpp"
#include "output.hpp"
#include "spectra.hpp"
#include "steady_state.hpp"
