#pragma once

#include "eaoa/common.hpp"

#include <span>
#include <vector>

// Free-energy scores over classifier logits. Energies follow E(x, c) = -f_c(x),
// so lower free energy means the input sits in a denser region.

namespace eaoa::energy {

/// -log sum_c exp(f_c), max-shifted.
double free_energy(std::span<const double> logits);

/// -log(1 + exp(f)) for a single class logit (binary, per-label form).
double label_wise_free_energy(double logit);

/// softmax(logits), max-shifted.
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest logit, lowest index on ties.
std::size_t argmax(std::span<const double> logits);

struct EnergyBreakdown {
    double e_known = 0.0;    ///< free energy over the C known-class logits
    double e_unknown = 0.0;  ///< label-wise free energy of the unknown-class logit
    double eu = 0.0;         ///< e_known - e_unknown
};

/// Epistemic score of a (C+1)-way detector output. The last logit is the
/// collapsed unknown class. Higher means more likely to be unknown.
EnergyBreakdown epistemic_uncertainty(std::span<const double> detector_logits);

/// Aleatoric score of a C-way classifier output: the free energy over all classes
/// minus that over every class except the argmax. Equals log(1 - max softmax).
double aleatoric_uncertainty(std::span<const double> classifier_logits);

struct MarginConfig {
    double m_known = -25.0;
    double m_unknown = -7.0;
    double lambda_e = 0.01;
    /// Apply the hinge to eu instead of e_known.
    bool use_eu = false;

    void validate() const;
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Squared-hinge energy loss on a detector output:
///   known:   max(0, E - m_known)^2
///   unknown: max(0, m_unknown - E)^2
/// where E is e_known (or eu when cfg.use_eu). Gradient is w.r.t. the logits.
/// `lambda_e` is not applied here.
LossAndGrad margin_energy_loss(std::span<const double> detector_logits, bool is_known,
                               const MarginConfig& cfg);

}  // namespace eaoa::energy
