#include "spomap/map.hpp"

#include <cmath>

namespace spomap {

StroboscopicMap::StroboscopicMap(std::shared_ptr<const SystemModel> sys, double eps, double theta0,
                                 IntegratorConfig cfg)
    : sys_(std::move(sys)), eps_(eps), theta0_(theta0), cfg_(cfg) {
    require(sys_ != nullptr, ErrorKind::argument, "stroboscopic map needs a system");
    require(eps_ >= 0.0, ErrorKind::argument, "stroboscopic map needs eps >= 0");
    const double omega = sys_->omega_p();
    require(omega != 0.0, ErrorKind::argument,
            "system has no perturbation frequency; pass the mapping time explicitly");
    tp_ = 2.0 * M_PI / std::abs(omega);
}

StroboscopicMap::StroboscopicMap(std::shared_ptr<const SystemModel> sys, double eps, double theta0,
                                 double mapping_time, IntegratorConfig cfg)
    : sys_(std::move(sys)), eps_(eps), theta0_(theta0), tp_(mapping_time), cfg_(cfg) {
    require(sys_ != nullptr, ErrorKind::argument, "stroboscopic map needs a system");
    require(tp_ > 0.0, ErrorKind::argument, "mapping time must be > 0");
}

Vec4 StroboscopicMap::apply(const Vec4& x) const {
    return flow(*sys_, eps_, x, theta0_, tp_, cfg_);
}

std::pair<Vec4, Mat4> StroboscopicMap::apply_with_jacobian(const Vec4& x) const {
    return flow_with_variational(*sys_, eps_, x, theta0_, tp_, cfg_);
}

SeriesVec StroboscopicMap::apply_jet(const SeriesVec& v) const {
    return jet_flow(*sys_, eps_, v, theta0_, tp_, cfg_);
}

MapFamily strobe_family(std::shared_ptr<const SystemModel> sys, double theta0, IntegratorConfig cfg) {
    return [sys = std::move(sys), theta0, cfg](double eps) {
        return std::make_shared<const StroboscopicMap>(sys, eps, theta0, cfg);
    };
}

}  // namespace spomap
