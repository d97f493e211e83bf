#include "eaoa/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eaoa::energy {

namespace {

void require_finite(std::span<const double> logits, const char* who) {
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) {
            throw ValidationError(std::string(who) + ": logit " + std::to_string(i) +
                                  " is not finite");
        }
    }
}

double log_sum_exp(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double f : logits) {
        s += std::exp(f - m);
    }
    return m + std::log(s);
}

// log(1 + e^x) without overflow.
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double free_energy(std::span<const double> logits) {
    if (logits.empty()) {
        throw ValidationError("free_energy: empty logit vector");
    }
    require_finite(logits, "free_energy");
    return -log_sum_exp(logits);
}

double label_wise_free_energy(double logit) { return -softplus(logit); }

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ValidationError("softmax: empty logit vector");
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        s += p[i];
    }
    for (double& v : p) {
        v /= s;
    }
    return p;
}

std::size_t argmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ValidationError("argmax: empty vector");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) {
            best = i;
        }
    }
    return best;
}

EnergyBreakdown epistemic_uncertainty(std::span<const double> detector_logits) {
    if (detector_logits.size() < 2) {
        throw ValidationError(
            "epistemic_uncertainty: need at least one known-class logit plus the unknown logit");
    }
    require_finite(detector_logits, "epistemic_uncertainty");
    const auto known = detector_logits.first(detector_logits.size() - 1);
    EnergyBreakdown out;
    out.e_known = -log_sum_exp(known);
    out.e_unknown = label_wise_free_energy(detector_logits.back());
    out.eu = out.e_known - out.e_unknown;
    return out;
}

double aleatoric_uncertainty(std::span<const double> classifier_logits) {
    if (classifier_logits.size() < 2) {
        throw ValidationError("aleatoric_uncertainty: need at least two classes");
    }
    require_finite(classifier_logits, "aleatoric_uncertainty");
    const std::size_t top = argmax(classifier_logits);
    const double m = classifier_logits[top];
    // Shifted by the max logit: total = 1 + secondary.
    double secondary = 0.0;
    for (std::size_t i = 0; i < classifier_logits.size(); ++i) {
        if (i != top) {
            secondary += std::exp(classifier_logits[i] - m);
        }
    }
    if (secondary == 0.0) {
        // Every secondary logit underflowed; fall back to the log-domain form.
        std::vector<double> rest;
        rest.reserve(classifier_logits.size() - 1);
        for (std::size_t i = 0; i < classifier_logits.size(); ++i) {
            if (i != top) {
                rest.push_back(classifier_logits[i] - m);
            }
        }
        const double log_secondary = log_sum_exp(rest);
        return log_secondary - softplus(log_secondary);
    }
    return std::log(secondary) - std::log1p(secondary);
}

void MarginConfig::validate() const {
    if (!std::isfinite(m_known) || !std::isfinite(m_unknown)) {
        throw ValidationError("energy margins must be finite");
    }
    if (!(m_known < m_unknown)) {
        throw ValidationError("energy.m_kno must be strictly below energy.m_unk");
    }
    if (!(lambda_e >= 0.0) || !std::isfinite(lambda_e)) {
        throw ValidationError("energy.lambda_e must be a finite non-negative number");
    }
}

LossAndGrad margin_energy_loss(std::span<const double> detector_logits, bool is_known,
                               const MarginConfig& cfg) {
    const EnergyBreakdown e = epistemic_uncertainty(detector_logits);
    const double score = cfg.use_eu ? e.eu : e.e_known;

    LossAndGrad out;
    out.grad.assign(detector_logits.size(), 0.0);
    const double gap = is_known ? score - cfg.m_known : cfg.m_unknown - score;
    if (gap <= 0.0) {
        return out;
    }
    out.loss = gap * gap;

    // d(loss)/d(score); the unknown branch enters with a minus sign.
    const double outer = is_known ? 2.0 * gap : -2.0 * gap;
    const auto known = detector_logits.first(detector_logits.size() - 1);
    const auto p = softmax(known);
    for (std::size_t c = 0; c < p.size(); ++c) {
        out.grad[c] = -outer * p[c];
    }
    if (cfg.use_eu) {
        out.grad.back() = outer * sigmoid(detector_logits.back());
    }
    return out;
}

}  // namespace eaoa::energy
