#include "pvdiag/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "pvdiag/errors.hpp"

namespace pvdiag {

namespace {
constexpr int kMaxStepShrinks = 3;

constexpr std::array<OptimizerKind, 6> kAllKinds = {
    OptimizerKind::Adahessian, OptimizerKind::Adam,    OptimizerKind::Adamax,
    OptimizerKind::AdamW,      OptimizerKind::AdaGrad, OptimizerKind::RMSProp};

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}
}  // namespace

std::string_view to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Adahessian: return "Adahessian";
        case OptimizerKind::Adam: return "Adam";
        case OptimizerKind::Adamax: return "Adamax";
        case OptimizerKind::AdamW: return "AdamW";
        case OptimizerKind::AdaGrad: return "AdaGrad";
        case OptimizerKind::RMSProp: return "RMSProp";
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    const std::string key = lowercase(name);
    for (OptimizerKind kind : kAllKinds) {
        if (lowercase(to_string(kind)) == key) return kind;
    }
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

const std::array<OptimizerKind, 6>& all_optimizer_kinds() { return kAllKinds; }

double LearningRate::at(int t) const {
    if (decay_every <= 0 || t <= 1) return eta;
    return eta * std::pow(decay_factor, static_cast<double>((t - 1) / decay_every));
}

void OptimizerConfig::validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must lie in (0, 1)");
    if (iterations < 1) throw ConfigError("optimizer: iterations must be >= 1");
    if (!(lr.eta > 0.0)) throw ConfigError("optimizer: eta must be positive");
    if (lr.decay_every < 0 || !(lr.decay_factor > 0.0)) throw ConfigError("optimizer: bad learning-rate decay");
    if (hutchinson_samples < 1) throw ConfigError("optimizer: hutchinson_samples must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be positive");
    if (!(hvp_step > 0.0)) throw ConfigError("optimizer: hvp_step must be positive");
    if (!(rmsprop_alpha > 0.0 && rmsprop_alpha < 1.0)) throw ConfigError("optimizer: rmsprop_alpha must lie in (0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("optimizer: weight_decay must be >= 0");
}

MomentState MomentState::zeros(Eigen::Index dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), 0};
}

Eigen::VectorXd MomentState::first_moment(double beta1) const {
    return m / (1.0 - std::pow(beta1, t));
}

Eigen::VectorXd MomentState::hessian_moment(double beta2) const {
    return (v / (1.0 - std::pow(beta2, t))).cwiseSqrt();
}

Eigen::VectorXd optimizer_step(MomentState& state, const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const std::optional<Eigen::VectorXd>& hessian_diag,
                               const OptimizerConfig& config) {
    const Eigen::Index dim = x.size();
    if (g.size() != dim || state.m.size() != dim || state.v.size() != dim) {
        throw DomainError("optimizer_step: shape mismatch");
    }
    if (config.lr_scale.size() != 0 && config.lr_scale.size() != dim) {
        throw DomainError("optimizer_step: lr_scale has wrong length");
    }

    state.t += 1;
    const int t = state.t;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double eps = config.epsilon;
    const Eigen::VectorXd eta = config.lr_scale.size() == 0
                                    ? Eigen::VectorXd::Constant(dim, config.lr.at(t))
                                    : Eigen::VectorXd(config.lr.at(t) * config.lr_scale);

    Eigen::VectorXd next;
    switch (config.kind) {
        case OptimizerKind::Adahessian: {
            if (!hessian_diag || hessian_diag->size() != dim) {
                throw DomainError("optimizer_step: Adahessian needs a Hessian diagonal estimate");
            }
            state.m = b1 * state.m + (1.0 - b1) * g;
            state.v = b2 * state.v + (1.0 - b2) * hessian_diag->cwiseAbs2();
            const Eigen::VectorXd m_hat = state.first_moment(b1);
            const Eigen::VectorXd v_hat = state.hessian_moment(b2);
            next = x - (eta.array() * m_hat.array() / (v_hat.array() + eps)).matrix();
            break;
        }
        case OptimizerKind::Adam:
        case OptimizerKind::AdamW: {
            Eigen::VectorXd base = x;
            if (config.kind == OptimizerKind::AdamW) {
                base = (x.array() * (1.0 - eta.array() * config.weight_decay)).matrix();
            }
            state.m = b1 * state.m + (1.0 - b1) * g;
            state.v = b2 * state.v + (1.0 - b2) * g.cwiseAbs2();
            const Eigen::ArrayXd m_hat = state.m.array() / (1.0 - std::pow(b1, t));
            const Eigen::ArrayXd v_hat = state.v.array() / (1.0 - std::pow(b2, t));
            next = base - (eta.array() * m_hat / (v_hat.sqrt() + eps)).matrix();
            break;
        }
        case OptimizerKind::Adamax: {
            state.m = b1 * state.m + (1.0 - b1) * g;
            state.v = (b2 * state.v.array()).max(g.array().abs() + eps).matrix();
            const double bias = 1.0 - std::pow(b1, t);
            next = x - (eta.array() / bias * state.m.array() / state.v.array()).matrix();
            break;
        }
        case OptimizerKind::AdaGrad: {
            state.v += g.cwiseAbs2();
            next = x - (eta.array() * g.array() / (state.v.array().sqrt() + eps)).matrix();
            break;
        }
        case OptimizerKind::RMSProp: {
            const double alpha = config.rmsprop_alpha;
            state.v = alpha * state.v + (1.0 - alpha) * g.cwiseAbs2();
            next = x - (eta.array() * g.array() / (state.v.array().sqrt() + eps)).matrix();
            break;
        }
    }
    if (!next.allFinite()) {
        throw NumericError("optimizer_step: non-finite update at step " + std::to_string(t), t);
    }
    return next;
}

Eigen::VectorXd hessian_diagonal(const Eigen::VectorXd& x, const GradientOracle& grad, double step,
                                 int samples, std::mt19937_64& rng, const Eigen::VectorXd& probe_scale) {
    const Eigen::Index dim = x.size();
    if (samples < 1) throw DomainError("hessian_diagonal: samples must be >= 1");
    if (probe_scale.size() != 0 && probe_scale.size() != dim) {
        throw DomainError("hessian_diagonal: scale has wrong length");
    }
    const Eigen::VectorXd scale = probe_scale.size() == 0 ? Eigen::VectorXd(x.cwiseAbs().cwiseMax(1.0)) : probe_scale;

    Eigen::VectorXd estimate = Eigen::VectorXd::Zero(dim);
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd z(dim);
        for (Eigen::Index i = 0; i < dim; ++i) z(i) = (rng() & 1U) ? 1.0 : -1.0;
        const Eigen::VectorXd dir = scale.cwiseProduct(z);

        double delta = step;
        bool done = false;
        for (int attempt = 0; attempt <= kMaxStepShrinks && !done; ++attempt) {
            try {
                const Eigen::VectorXd diff = grad(x + delta * dir) - grad(x - delta * dir);
                estimate.array() += z.array() * diff.array() / (2.0 * delta * scale.array());
                done = true;
            } catch (const DomainError&) {
                delta *= 0.1;
            } catch (const InfeasibleFault&) {
                delta *= 0.1;
            }
        }
        if (!done) {
            throw NumericError("hessian_diagonal: perturbation stayed infeasible after shrinking the step");
        }
    }
    return estimate / static_cast<double>(samples);
}

}  // namespace pvdiag
