#include "pvdiag/identify.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "pvdiag/gradients.hpp"

namespace pvdiag {

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Eigen::VectorXd default_lr_scale(const StringTopology& topology) {
    const int p = topology.N_ps;
    Eigen::VectorXd scale(3 * p + 2);
    scale.segment(0, p).setConstant(3.0);
    scale.segment(p, p).setConstant(30.0);
    scale.segment(2 * p, p).setConstant(3.0);
    scale(3 * p) = 0.3;
    scale(3 * p + 1) = 0.3;
    return scale;
}

IdentificationResult identify(const IVCurve& curve, const ModelContext& ctx, const OptimizerConfig& config,
                              const FeasibleRegion& region, const IdentifyOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    validate_curve(curve);
    ctx.validate();
    config.validate();
    region.validate();
    const int p = ctx.topology.N_ps;
    if (region.N_ps != p || region.N_sub != ctx.topology.N_sub()) {
        throw ConfigError("identify: region does not match the topology");
    }

    const StringSimulator sim(ctx, curve.current, curve.G, curve.T);
    const Eigen::VectorXd& measured = curve.voltage;
    const GradientOracle gradient_at = [&](const Eigen::VectorXd& y) {
        return evaluate(sim, FaultVector::from_flat(y, p), measured, false).gradient.to_flat();
    };

    IdentificationResult result;
    result.loss_trajectory.reserve(static_cast<std::size_t>(config.iterations));
    result.grad_norm_trajectory.reserve(static_cast<std::size_t>(config.iterations));

    std::mt19937_64 rng(config.seed);
    MomentState state = MomentState::zeros(3 * p + 2);
    Eigen::VectorXd x = project(Eigen::VectorXd::Zero(3 * p + 2), region);
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    int t = 0;
    try {
        for (t = 1; t <= config.iterations; ++t) {
            const FaultVector xf = FaultVector::from_flat(x, p);
            const VoltageState vs = sim.forward(xf);
            const LossValue lv = loss(vs.v, measured);
            const Eigen::VectorXd g = grad_loss(lv, grad_voltage(vs, xf, sim)).to_flat();
            result.loss_trajectory.push_back(lv.mse);
            result.grad_norm_trajectory.push_back(g.norm());

            std::optional<Eigen::VectorXd> diag;
            if (config.kind == OptimizerKind::Adahessian) {
                diag = hessian_diagonal(x, gradient_at, config.hvp_step, config.hutchinson_samples, rng);
            }
            x = project(optimizer_step(state, x, g, diag, config), region);
            if (options.check_feasibility && !region.contains(x)) {
                throw ContractError("identify: iterate " + std::to_string(t) + " left the feasible region");
            }
            result.iterations = t;
        }
        result.x_raw = FaultVector::from_flat(x, p);
        result.final_loss = evaluate(sim, result.x_raw, measured).loss.mse;
        result.x_final = correct(result.x_raw, region, options.thresholds);
        result.corrected_loss = loss(sim.forward(result.x_final).v, measured).mse;
        result.reconstruction_rmse = std::sqrt(result.corrected_loss);
    } catch (const ContractError&) {
        throw;
    } catch (const Error& e) {
        result.x_raw = FaultVector::from_flat(x, p);
        result.wall_time = elapsed();
        throw IdentificationAborted(std::string("identification aborted at iteration ") + std::to_string(t) +
                                        ": " + e.what(),
                                    t, std::move(result));
    }
    result.wall_time = elapsed();
    return result;
}

}  // namespace pvdiag
