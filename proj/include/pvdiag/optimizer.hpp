#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace pvdiag {

enum class OptimizerKind { Adahessian, Adam, Adamax, AdamW, AdaGrad, RMSProp };

[[nodiscard]] std::string_view to_string(OptimizerKind kind);
/// Case-insensitive; throws ConfigError on an unknown name.
[[nodiscard]] OptimizerKind parse_optimizer_kind(std::string_view name);
[[nodiscard]] const std::array<OptimizerKind, 6>& all_optimizer_kinds();

/// Constant rate, or step decay: eta * decay_factor^floor((t-1) / decay_every).
struct LearningRate {
    double eta = 0.1;
    double decay_factor = 1.0;
    int decay_every = 0;  ///< 0 disables decay

    [[nodiscard]] double at(int t) const;
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adahessian;
    LearningRate lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int iterations = 1000;        ///< M
    int hutchinson_samples = 1;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
    double hvp_step = 1e-3;       ///< relative finite-difference step for Hessian-vector products
    double weight_decay = 0.01;   ///< AdamW only
    double rmsprop_alpha = 0.99;  ///< RMSProp only
    /// Multiplies the learning rate per component (flat fault layout). Empty means 1.
    Eigen::VectorXd lr_scale;

    void validate() const;
};

/// Moment accumulators. For Adahessian `v` holds the EMA of squared Hessian
/// diagonal estimates; for the first-order kinds it holds the optimizer's own
/// second-moment statistic (EMA or sum of g^2, or the infinity norm for Adamax).
struct MomentState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    int t = 0;

    [[nodiscard]] static MomentState zeros(Eigen::Index dim);

    /// Bias-corrected first moment (1-beta1) sum beta1^(t-i) g_i / (1-beta1^t).
    [[nodiscard]] Eigen::VectorXd first_moment(double beta1) const;
    /// Adahessian second moment sqrt((1-beta2) sum beta2^(t-i) D_i^2 / (1-beta2^t)).
    [[nodiscard]] Eigen::VectorXd hessian_moment(double beta2) const;
};

/// One update. Increments state.t, folds g (and D for Adahessian) into the
/// moments, returns the unprojected next iterate. Adahessian uses
/// x - eta m_t / (v_t + eps); first-order kinds use their standard update.
/// Throws NumericError on a non-finite result.
[[nodiscard]] Eigen::VectorXd optimizer_step(MomentState& state, const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& g,
                                             const std::optional<Eigen::VectorXd>& hessian_diag,
                                             const OptimizerConfig& config);

/// Gradient oracle used for Hessian-vector products. May throw DomainError
/// (or InfeasibleFault) when the probe point is outside its domain.
using GradientOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Hutchinson estimate of diag(H): mean over samples of z * (H z) with
/// Rademacher z. H z comes from a central difference of the gradient along
/// z scaled per component by `scale` (default max(|x_i|, 1)); the scaling is
/// divided back out so the estimate stays unbiased. A probe that leaves the
/// oracle's domain shrinks the step by 10x, up to three times.
[[nodiscard]] Eigen::VectorXd hessian_diagonal(const Eigen::VectorXd& x, const GradientOracle& grad,
                                               double step, int samples, std::mt19937_64& rng,
                                               const Eigen::VectorXd& scale = {});

}  // namespace pvdiag
