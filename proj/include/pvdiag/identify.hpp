#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pvdiag/curve_io.hpp"
#include "pvdiag/errors.hpp"
#include "pvdiag/optimizer.hpp"
#include "pvdiag/projection.hpp"
#include "pvdiag/string_model.hpp"

namespace pvdiag {

struct IdentificationResult {
    FaultVector x_final;                      ///< after correction
    FaultVector x_raw;                        ///< last projected iterate
    std::vector<double> loss_trajectory;      ///< loss at the iterate entering step t (V^2)
    std::vector<double> grad_norm_trajectory; ///< Euclidean norm of dL/dx at the same iterate
    double final_loss = 0.0;                  ///< loss at x_raw
    double corrected_loss = 0.0;              ///< loss at x_final
    double reconstruction_rmse = 0.0;         ///< sqrt(corrected_loss) (V)
    int iterations = 0;
    double wall_time = 0.0;                   ///< seconds
};

/// Raised when an iteration fails; carries everything recorded up to that point.
class IdentificationAborted : public NumericError {
public:
    IdentificationAborted(const std::string& what, int iteration, IdentificationResult partial)
        : NumericError(what, iteration), partial_(std::move(partial)) {}

    [[nodiscard]] const IdentificationResult& partial() const noexcept { return partial_; }

private:
    IdentificationResult partial_;
};

struct IdentifyOptions {
    CorrectionThresholds thresholds;
    /// Check every projected iterate against the region (ContractError on failure).
    bool check_feasibility = false;
};

/// Projected-gradient fit of a fault vector to one preprocessed curve.
///
/// Starts at the projection of zero and runs config.iterations steps of
/// forward, loss, backward, optimizer update and projection, then applies the
/// output correction. Deterministic for a fixed config.seed.
[[nodiscard]] IdentificationResult identify(const IVCurve& curve, const ModelContext& ctx,
                                            const OptimizerConfig& config, const FeasibleRegion& region,
                                            const IdentifyOptions& options = {});

/// Seed for curve `index` of a batch, mixed from the batch seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

/// Default per-component learning-rate multipliers for a topology:
/// 3 on n_s and r, 30 on n_c (its loss slope is shallow), 0.3 on N_sc and R_c
/// (they otherwise absorb shading before r leaves zero).
[[nodiscard]] Eigen::VectorXd default_lr_scale(const StringTopology& topology);

}  // namespace pvdiag
