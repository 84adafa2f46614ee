#include <Eigen/Dense>

#include <string>

#include "device_model.hpp"
#include "phasebal/powerflow.hpp"

namespace phasebal {

namespace {

/// path[k][s] is true when segment s (feeding node s + 1) lies on the
/// source-to-k path.
std::vector<std::vector<bool>> source_paths(const Feeder& feeder) {
    const std::size_t n = feeder.node_count();
    std::vector<std::vector<bool>> path(n, std::vector<bool>(n > 0 ? n - 1 : 0, false));
    for (std::size_t k = 1; k < n; ++k) {
        for (std::size_t at = k; at != 0; at = feeder.parent(at)) path[k][at - 1] = true;
    }
    return path;
}

}  // namespace

VoltageSolution oracle_solve(const Feeder& feeder, const Injections& injections, const SolverSettings& settings) {
    settings.validate();
    detail::check_injections(feeder, injections);
    const std::size_t n = feeder.node_count();
    if (n > kOracleMaxNodes) {
        throw Error(ErrorCode::InvalidArgument, "dense oracle handles at most " + std::to_string(kOracleMaxNodes) +
                                                    " nodes, feeder has " + std::to_string(n));
    }
    const auto path = source_paths(feeder);
    const Eigen::Index dim = static_cast<Eigen::Index>(kConductors * n);
    const std::size_t segs = n > 0 ? n - 1 : 0;

    // Z_bus block (i, j) = sum of segment impedances shared by both source paths.
    Eigen::MatrixXcd z_bus = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t s = 0; s < segs; ++s) {
                if (!(path[i][s] && path[j][s])) continue;
                const ImpedanceMatrix& z = feeder.feeding_impedance(s + 1);
                for (std::size_t r = 0; r < kConductors; ++r) {
                    for (std::size_t c = 0; c < kConductors; ++c) {
                        z_bus(static_cast<Eigen::Index>(kConductors * i + r),
                              static_cast<Eigen::Index>(kConductors * j + c)) += z[r][c];
                    }
                }
            }
        }
    }

    // segment currents = incidence * nodal draw
    Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kConductors * segs), dim);
    for (std::size_t j = 1; j < n; ++j) {
        for (std::size_t s = 0; s < segs; ++s) {
            if (!path[j][s]) continue;
            for (std::size_t c = 0; c < kConductors; ++c) {
                incidence(static_cast<Eigen::Index>(kConductors * s + c), static_cast<Eigen::Index>(kConductors * j + c)) = 1.0;
            }
        }
    }

    const ConductorSet source = source_voltages(feeder.v_base_ln());
    Eigen::VectorXcd v0(dim);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t c = 0; c < kConductors; ++c) v0(static_cast<Eigen::Index>(kConductors * k + c)) = source[c];
    }

    auto unpack = [&](const Eigen::VectorXcd& x, std::size_t blocks) {
        std::vector<ConductorSet> out(blocks);
        for (std::size_t k = 0; k < blocks; ++k) {
            for (std::size_t c = 0; c < kConductors; ++c) out[k][c] = x(static_cast<Eigen::Index>(kConductors * k + c));
        }
        return out;
    };

    VoltageSolution sol;
    Eigen::VectorXcd v = v0;
    sol.v = unpack(v, n);
    for (int iter = 1; iter <= settings.max_iter; ++iter) {
        sol.device_current = detail::device_currents(feeder, injections, sol.v, iter);
        const auto draw = detail::nodal_draw(feeder, sol.device_current);
        Eigen::VectorXcd j(dim);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t c = 0; c < kConductors; ++c) j(static_cast<Eigen::Index>(kConductors * k + c)) = draw[k][c];
        }
        const Eigen::VectorXcd next = v0 - z_bus * j;
        const double delta = (next - v).cwiseAbs().maxCoeff();
        v = next;
        sol.v = unpack(v, n);
        sol.branch_current = unpack(incidence.cast<Complex>() * j, segs);
        sol.iterations = iter;
        sol.residual_pu = delta / feeder.v_base_ln();
        if (sol.residual_pu <= settings.tol_pu) {
            sol.converged = true;
            return sol;
        }
    }
    throw SolverError(ErrorCode::NonConvergence,
                      "oracle: no convergence after " + std::to_string(settings.max_iter) + " iterations",
                      settings.max_iter, sol.residual_pu);
}

}  // namespace phasebal
