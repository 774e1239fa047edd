#include "podlab/modal/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "podlab/errors.hpp"

namespace podlab::modal {

void LinearModel::validate() const {
    const auto n = a.rows();
    if (a.cols() != n || b.size() != n || c.size() != n) {
        throw std::invalid_argument("linear model dimensions are inconsistent");
    }
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n) {
        throw std::invalid_argument("linear model labels do not match its order");
    }
}

LinearModel linearize(const DynamicsFn& f, const OutputFn& h, const Eigen::VectorXd& x0,
                      const LinearizeOptions& opt, std::vector<std::string> labels) {
    const auto n = x0.size();
    const Eigen::VectorXd f0 = f(x0, 0.0);
    const double norm = f0.size() ? f0.cwiseAbs().maxCoeff() : 0.0;
    if (!(norm < opt.equilibrium_tol)) {
        std::ostringstream msg;
        msg << "operating point is not an equilibrium: |dx/dt|_inf = " << norm;
        throw ModelError(msg.str());
    }

    auto step_for = [&](double v) {
        return std::max(opt.perturbation * std::max(std::abs(v), 1.0), opt.floor);
    };

    LinearModel lm;
    lm.a.resize(n, n);
    lm.c.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double hj = step_for(x0(j));
        Eigen::VectorXd xp = x0;
        Eigen::VectorXd xm = x0;
        xp(j) += hj;
        xm(j) -= hj;
        lm.a.col(j) = (f(xp, 0.0) - f(xm, 0.0)) / (2.0 * hj);
        lm.c(j) = (h(xp) - h(xm)) / (2.0 * hj);
    }
    const double hu = step_for(0.0);
    lm.b = (f(x0, hu) - f(x0, -hu)) / (2.0 * hu);
    lm.labels = std::move(labels);
    lm.validate();
    return lm;
}

LinearModel linearize(const grid::PowerSystem& ps, const grid::Channel& output, std::size_t actuator,
                      const LinearizeOptions& opt, const grid::Conditions& conditions) {
    const grid::CMatrix y_static = ps.static_admittance(conditions);
    auto f = [&](const Eigen::VectorXd& x, double u) {
        auto inputs = ps.zero_inputs();
        if (actuator < inputs.tcsc_modulation.size()) inputs.tcsc_modulation[actuator] = u;
        const auto v = ps.solve(x, conditions, &y_static);
        return ps.derivatives(x, v, inputs, conditions);
    };
    auto h = [&](const Eigen::VectorXd& x) {
        const auto v = ps.solve(x, conditions, &y_static);
        return ps.measure(output, x, v);
    };
    return linearize(f, h, ps.initial_state(), opt, ps.layout().labels());
}

}  // namespace podlab::modal
