#pragma once

// Symplectic map abstraction.  Stroboscopic maps evaluate by integrating the
// underlying flow for the mapping time; explicit-formula maps (used by tests
// and by the separatrix direct path) override the three evaluations directly.

#include <memory>

#include "spomap/integrate.hpp"
#include "spomap/systems.hpp"

namespace spomap {

class SymplecticMap {
public:
    virtual ~SymplecticMap() = default;

    virtual Vec4 apply(const Vec4& x) const = 0;
    virtual std::pair<Vec4, Mat4> apply_with_jacobian(const Vec4& x) const = 0;
    virtual SeriesVec apply_jet(const SeriesVec& v) const = 0;

    virtual double eps() const { return 0.0; }
};

// Time-T_p flow map restricted to a fixed perturbation-phase section theta_0.
class StroboscopicMap final : public SymplecticMap {
public:
    // T_p = 2*pi/|omega_p| of the system.
    StroboscopicMap(std::shared_ptr<const SystemModel> sys, double eps, double theta0,
                    IntegratorConfig cfg = {});
    // Explicit mapping time, for autonomous systems (flow-map mode).
    StroboscopicMap(std::shared_ptr<const SystemModel> sys, double eps, double theta0,
                    double mapping_time, IntegratorConfig cfg);

    Vec4 apply(const Vec4& x) const override;
    std::pair<Vec4, Mat4> apply_with_jacobian(const Vec4& x) const override;
    SeriesVec apply_jet(const SeriesVec& v) const override;

    double eps() const override { return eps_; }
    double theta0() const { return theta0_; }
    double mapping_time() const { return tp_; }
    const SystemModel& system() const { return *sys_; }
    std::shared_ptr<const SystemModel> system_ptr() const { return sys_; }
    const IntegratorConfig& integrator() const { return cfg_; }

private:
    std::shared_ptr<const SystemModel> sys_;
    double eps_;
    double theta0_;
    double tp_;
    IntegratorConfig cfg_;
};

// A family eps -> F_eps sharing one section phase, used by continuation.
using MapFamily = std::function<std::shared_ptr<const SymplecticMap>(double eps)>;

MapFamily strobe_family(std::shared_ptr<const SystemModel> sys, double theta0,
                        IntegratorConfig cfg = {});

}  // namespace spomap
