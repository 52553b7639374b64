#pragma once

// Helpers that produce flow-periodic orbit seeds with a prescribed period:
// an x-axis symmetric orbit finder for the three/four-body models and the
// libration-amplitude tuner for the pendulum test system.

#include "spomap/integrate.hpp"
#include "spomap/systems.hpp"

namespace spomap {

struct SymmetricOrbitGuess {
    double x = 0.0;   // perpendicular x-axis crossing position
    double py = 0.0;  // momentum there (y = px = 0)
};

// Finds a symmetric periodic orbit of the eps = 0 flow with rotating-frame
// period exactly `period`: shoots py to reach a perpendicular crossing at the
// half period near t = period/2, then adjusts x until the measured period
// matches.  Returns the corrected initial state (x, 0, 0, py).
Vec4 find_symmetric_orbit(const SystemModel& sys, double period, const SymmetricOrbitGuess& guess,
                          const IntegratorConfig& cfg = {}, double period_rel_tol = 1e-11);

// Period of the symmetric orbit through (x, 0, 0, py): twice the time to the
// next perpendicular crossing near t_half_hint.
double symmetric_orbit_period(const SystemModel& sys, const Vec4& x0, double t_half_hint,
                              const IntegratorConfig& cfg = {});

// Kepler-ellipse apoapsis guess for an interior j:(j-1)-type resonant orbit
// family member of eccentricity e; a is the resonant semi-major axis.
SymmetricOrbitGuess kepler_apoapsis_guess(double mu, double a, double e);

// Amplitude y_max of the pendulum libration with period T (quarter period
// K(sin(y_max/2)) = T/4), found by bisection on the elliptic integral.
double pendulum_amplitude_for_period(double T);

}  // namespace spomap
