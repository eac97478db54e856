#pragma once

// Umbrella header for the non-linear bosonic quantum-battery toolkit.

#include "qbattery/certify.hpp"
#include "qbattery/classical.hpp"
#include "qbattery/dynamics.hpp"
#include "qbattery/errors.hpp"
#include "qbattery/fock.hpp"
#include "qbattery/models.hpp"
#include "qbattery/propagator.hpp"
#include "qbattery/scenario.hpp"
#include "qbattery/verify.hpp"
#include "qbattery/version.hpp"
