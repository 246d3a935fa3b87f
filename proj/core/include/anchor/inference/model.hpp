#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anchor/domain/types.hpp"

namespace anchor::inference {

struct LatentVariable {
    std::string name;
    std::vector<FactorId> members;
    double p_given_o1 = 0.5;  // P(L = 1 | O1)
    double p_given_o2 = 0.5;  // P(L = 1 | O2)

    friend bool operator==(const LatentVariable&, const LatentVariable&) = default;
};

// Outcome -> latents -> factors with a uniform outcome prior. No latents
// means the naive Bayes special case.
struct LatentBayesModel {
    std::string scenario_id;
    std::map<FactorId, double> factor_params;  // θ_f = P(f = 1 | parent = 1)
    std::vector<LatentVariable> latents;

    friend bool operator==(const LatentBayesModel&, const LatentBayesModel&) = default;
};

struct EvidenceSet {
    std::vector<FactorId> active;  // observed present
};

// Throws DomainError when parameters leave (0, 1), members overlap, or
// evidence names an unknown factor.
void validate_model(const LatentBayesModel& model);

double smooth_probability(double p, double clamp);
double label_prior(FactorLabel label) noexcept;  // 0.75 / 0.50 / 0.25
std::map<FactorId, double> init_factor_priors_from_labels(const std::map<FactorId, FactorLabel>& labels);

// Logistic of l1 - l2 evaluated so that swapping the arguments gives the
// exact complement.
double posterior_from_logs(double log_l1, double log_l2) noexcept;

// ∏θ / (∏θ + ∏(1-θ)). A single factor returns θ exactly; empty input 0.5.
double nb_posterior(const std::vector<double>& thetas);
double nb_posterior(const LatentBayesModel& model, const EvidenceSet& evidence);

struct Likelihoods {
    double log_o1 = 0.0;  // log P(E | O1)
    double log_o2 = 0.0;
};

// Per-latent-group closed form; latents without observed members contribute 1.
Likelihoods cbn_likelihoods(const LatentBayesModel& model, const EvidenceSet& evidence);
double cbn_posterior(const LatentBayesModel& model, const EvidenceSet& evidence);

// Literal enumeration of the joint over latent states and unobserved factors.
// SizeError when k > 10 or more than 14 factors.
double cbn_posterior_bruteforce(const LatentBayesModel& model, const EvidenceSet& evidence);
Likelihoods cbn_likelihoods_bruteforce(const LatentBayesModel& model, const EvidenceSet& evidence);

struct OutcomeCpt {
    std::vector<double> p_o1;  // row index bit i = state of latent i
    std::vector<double> p_o2;
};

// P(O | L = ℓ) by Bayes' rule under the uniform prior. DomainError when k > 20.
OutcomeCpt outcome_cpt_from_latents(const std::vector<LatentVariable>& latents);

// (P(L=1|O1), P(L=1|O2)) from label counts with neutrals split evenly and
// Laplace count epsilon.
std::pair<double, double> latent_cpt_from_counts(double c1, double c2, double c_neutral, double epsilon);

struct CovarianceReport {
    double covariance = 0.0;  // β(1-β)(2θa-1)(2θb-1)
    double joint = 0.0;       // P(fa = 1, fb = 1 | O)
    double marginal_a = 0.0;
    double marginal_b = 0.0;
};

CovarianceReport shared_latent_covariance(double beta, double theta_a, double theta_b);

struct LikelihoodRatioReport {
    std::vector<double> lrs;
    std::optional<double> bound;  // Σ |log LR - log LR*| when true ratios are given
};

LikelihoodRatioReport implied_lr_and_log_odds_bound(const std::vector<double>& phis,
                                                    const std::optional<std::vector<double>>& true_lrs = {});

// Convex combination, clipped to the bracket of its inputs.
double aggregate_lop(double p_nb, double p_cbn, double w_nb, double w_cbn);

// Weights ∝ 0.5 · P(O1|E,M) · P(O2|E,M).
double aggregate_bma(std::pair<double, double> nb, std::pair<double, double> cbn);

}  // namespace anchor::inference
