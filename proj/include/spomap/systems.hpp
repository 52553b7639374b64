#pragma once

// Hamiltonian family models: right-hand side, its Jacobian, the series-valued
// right-hand side for jet transport, and the Hamiltonian itself.

#include <Eigen/Core>
#include <map>
#include <memory>
#include <numeric>
#include <string>

#include "spomap/series.hpp"

namespace spomap {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Rotation number omega = 2*pi*p/q per map iterate.
struct ResonanceLabel {
    int p = 1;
    int q = 1;

    void validate() const {
        require(p > 0 && q > 0, ErrorKind::argument, "resonance label needs positive p, q");
        require(std::gcd(p, q) == 1, ErrorKind::argument, "resonance label p/q must be coprime");
    }
    double omega() const { return 2.0 * M_PI * double(p) / double(q); }
};

// A family H_eps = H_0 + H_1(...; eps) in coordinates (x, y, px, py) with an
// explicit perturbation phase theta_p advancing at rate omega_p.
class SystemModel {
public:
    virtual ~SystemModel() = default;

    virtual std::string name() const = 0;
    virtual double omega_p() const = 0;

    virtual double hamiltonian(const Vec4& x, double theta_p, double eps) const = 0;
    virtual Vec4 rhs(const Vec4& x, double theta_p, double eps) const = 0;
    // dfdx is the 4x4 state Jacobian of rhs; dfdtheta its theta_p derivative.
    virtual void rhs_jacobian(const Vec4& x, double theta_p, double eps, Mat4& dfdx,
                              Vec4& dfdtheta) const = 0;
    virtual void rhs_jet(const SeriesVec& x, double theta_p, double eps, SeriesVec& out,
                         SeriesWorkspace& ws) const = 0;

    virtual std::map<std::string, double> params() const = 0;
};

// Planar circular restricted three-body problem; eps is ignored.
std::shared_ptr<const SystemModel> make_pcr3bp(double mu);

// Planar concentric circular restricted four-body problem.  r13 is the third
// body's orbit radius and omega3 its angular rate, both in units normalized
// to the m1-m2 pair; theta_p advances at omega3 - 1.
std::shared_ptr<const SystemModel> make_ccr4bp(double mu, double r13, double omega3);

// Kepler value of omega3 for a third body of mass ratio eps_ref at radius r13.
double kepler_omega3(double mu, double eps_ref, double r13);

// Synthetic desk-scale test system: a hyperbolic (x, px) saddle crossed with a
// (y, py) libration family, forced through H_1 = eps*cos(y - theta_p).
std::shared_ptr<const SystemModel> make_forced_pendulum(double omega_p);

}  // namespace spomap
