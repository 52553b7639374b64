#pragma once

// Adaptive explicit Runge-Kutta propagation of states, variational equations,
// and truncated-series vectors (jet transport).  The stepper is the 8(5,3)
// Dormand-Prince pair of Hairer's DOP853.

#include <Eigen/Core>
#include <functional>
#include <span>

#include "spomap/series.hpp"
#include "spomap/systems.hpp"

namespace spomap {

struct IntegratorConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    long max_steps = 10'000'000;
    double initial_step = 0.0;  // 0 = choose automatically

    void validate() const {
        require(abs_tol > 0 && rel_tol > 0, ErrorKind::argument, "integrator tolerances must be > 0");
        require(max_steps > 0, ErrorKind::argument, "integrator max_steps must be > 0");
    }
};

class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& msg, double last_good_time)
        : NumericalError(msg), last_good_time_(last_good_time) {}
    double last_good_time() const { return last_good_time_; }

private:
    double last_good_time_;
};

using OdeRhs = std::function<void(double t, const double* y, double* dy)>;

// Advances y in place from t0 to t1.  Throws IntegrationError on step-count
// exhaustion or non-finite state, carrying the last good time.
void integrate_dop853(const OdeRhs& rhs, std::span<double> y, double t0, double t1,
                      const IntegratorConfig& cfg);

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Time-t flow of the system's equations of motion; theta_p advances at the
// system's perturbation frequency.
Vec4 flow(const SystemModel& sys, double eps, const Vec4& x0, double theta_p0, double t,
          const IntegratorConfig& cfg);

// State and Jacobian of the time-t flow, co-integrated as one system so both
// see the same step sequence.
std::pair<Vec4, Mat4> flow_with_variational(const SystemModel& sys, double eps, const Vec4& x0,
                                            double theta_p0, double t, const IntegratorConfig& cfg);

// Coefficient-wise integration of the series equations of motion.
SeriesVec jet_flow(const SystemModel& sys, double eps, const SeriesVec& v0, double theta_p0,
                   double t, const IntegratorConfig& cfg);

}  // namespace spomap
