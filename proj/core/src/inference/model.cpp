#include "anchor/inference/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "anchor/domain/errors.hpp"

namespace anchor::inference {
namespace {

bool open_unit(double p) { return p > 0.0 && p < 1.0; }

void require_open_unit(double p, const std::string& what) {
    if (!open_unit(p)) throw DomainError(what + " must lie strictly between 0 and 1");
}

double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -INFINITY) return a;
    return a + std::log1p(std::exp(b - a));
}

// Running product kept as mantissa * 2^exponent so long evidence sets do not
// underflow.
struct ScaledProduct {
    double mantissa = 1.0;
    long exponent = 0;

    void multiply(double x) {
        int e = 0;
        mantissa = std::frexp(mantissa * x, &e);
        exponent += e;
    }
};

const LatentVariable* parent_of(const LatentBayesModel& model, const FactorId& id) {
    for (const auto& l : model.latents) {
        for (const auto& m : l.members) {
            if (m == id) return &l;
        }
    }
    return nullptr;
}

void validate_evidence(const LatentBayesModel& model, const EvidenceSet& evidence) {
    std::set<FactorId> seen;
    for (const auto& id : evidence.active) {
        if (!model.factor_params.count(id)) throw DomainError("evidence names an unknown factor: " + id);
        if (!seen.insert(id).second) throw DomainError("evidence lists a factor twice: " + id);
    }
}

}  // namespace

void validate_model(const LatentBayesModel& model) {
    for (const auto& [id, theta] : model.factor_params) require_open_unit(theta, "theta of " + id);
    std::set<FactorId> assigned;
    for (const auto& l : model.latents) {
        if (l.members.empty()) throw DomainError("latent has no members: " + l.name);
        require_open_unit(l.p_given_o1, "P(L=1|O1) of " + l.name);
        require_open_unit(l.p_given_o2, "P(L=1|O2) of " + l.name);
        for (const auto& m : l.members) {
            if (!model.factor_params.count(m)) throw DomainError("latent member has no parameter: " + m);
            if (!assigned.insert(m).second) throw DomainError("factor assigned to two latents: " + m);
        }
    }
}

double smooth_probability(double p, double clamp) {
    if (!(clamp > 0.0 && clamp < 0.5)) throw DomainError("clamp must lie in (0, 0.5)");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
    return std::min(1.0 - clamp, std::max(clamp, p));
}

double label_prior(FactorLabel label) noexcept {
    switch (label) {
        case FactorLabel::SupportsO1: return 0.75;
        case FactorLabel::SupportsO2: return 0.25;
        case FactorLabel::Neutral: break;
    }
    return 0.5;
}

std::map<FactorId, double> init_factor_priors_from_labels(const std::map<FactorId, FactorLabel>& labels) {
    std::map<FactorId, double> out;
    for (const auto& [id, label] : labels) out[id] = label_prior(label);
    return out;
}

double posterior_from_logs(double log_l1, double log_l2) noexcept {
    if (log_l1 <= log_l2) return 1.0 / (1.0 + std::exp(log_l2 - log_l1));
    return 1.0 - 1.0 / (1.0 + std::exp(log_l1 - log_l2));
}

double nb_posterior(const std::vector<double>& thetas) {
    ScaledProduct a, b;
    for (double t : thetas) {
        require_open_unit(t, "theta");
        a.multiply(t);
        b.multiply(1.0 - t);
    }
    const long top = std::max(a.exponent, b.exponent);
    const double x = std::ldexp(a.mantissa, static_cast<int>(std::max(a.exponent - top, -2000L)));
    const double y = std::ldexp(b.mantissa, static_cast<int>(std::max(b.exponent - top, -2000L)));
    if (x <= y) return x / (x + y);
    return 1.0 - y / (x + y);
}

double nb_posterior(const LatentBayesModel& model, const EvidenceSet& evidence) {
    validate_evidence(model, evidence);
    std::vector<double> thetas;
    for (const auto& id : evidence.active) thetas.push_back(model.factor_params.at(id));
    return nb_posterior(thetas);
}

Likelihoods cbn_likelihoods(const LatentBayesModel& model, const EvidenceSet& evidence) {
    validate_model(model);
    validate_evidence(model, evidence);
    std::map<const LatentVariable*, std::pair<double, double>> groups;  // Σ log θ, Σ log(1-θ)
    for (const auto& id : evidence.active) {
        const LatentVariable* parent = parent_of(model, id);
        if (!parent) throw DomainError("evidence factor has no latent parent: " + id);
        const double theta = model.factor_params.at(id);
        auto& g = groups[parent];
        g.first += std::log(theta);
        g.second += std::log(1.0 - theta);
    }
    Likelihoods out;
    for (const auto& l : model.latents) {
        auto it = groups.find(&l);
        if (it == groups.end()) continue;
        const auto [on, off] = it->second;
        if (on == off) {
            out.log_o1 += on;
            out.log_o2 += on;
            continue;
        }
        out.log_o1 += log_add_exp(std::log(l.p_given_o1) + on, std::log1p(-l.p_given_o1) + off);
        out.log_o2 += log_add_exp(std::log(l.p_given_o2) + on, std::log1p(-l.p_given_o2) + off);
    }
    return out;
}

double cbn_posterior(const LatentBayesModel& model, const EvidenceSet& evidence) {
    const auto l = cbn_likelihoods(model, evidence);
    return posterior_from_logs(l.log_o1, l.log_o2);
}

Likelihoods cbn_likelihoods_bruteforce(const LatentBayesModel& model, const EvidenceSet& evidence) {
    validate_model(model);
    validate_evidence(model, evidence);
    const std::size_t k = model.latents.size();
    std::vector<FactorId> factors;
    std::vector<std::size_t> parent;
    for (std::size_t i = 0; i < k; ++i) {
        for (const auto& m : model.latents[i].members) {
            factors.push_back(m);
            parent.push_back(i);
        }
    }
    if (k > 10) throw SizeError("brute-force enumeration limited to 10 latents");
    if (factors.size() > 14) throw SizeError("brute-force enumeration limited to 14 factors");
    for (const auto& id : evidence.active) {
        if (!parent_of(model, id)) throw DomainError("evidence factor has no latent parent: " + id);
    }

    const std::set<FactorId> observed(evidence.active.begin(), evidence.active.end());
    std::vector<std::size_t> hidden;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        if (!observed.count(factors[j])) hidden.push_back(j);
    }

    double sum[2] = {0.0, 0.0};
    for (int r = 0; r < 2; ++r) {
        for (std::size_t ell = 0; ell < (std::size_t{1} << k); ++ell) {
            double p_latents = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double alpha = r == 0 ? model.latents[i].p_given_o1 : model.latents[i].p_given_o2;
                p_latents *= (ell >> i) & 1 ? alpha : 1.0 - alpha;
            }
            for (std::size_t h = 0; h < (std::size_t{1} << hidden.size()); ++h) {
                double p = p_latents;
                std::size_t next_hidden = 0;
                for (std::size_t j = 0; j < factors.size(); ++j) {
                    bool value = true;
                    if (next_hidden < hidden.size() && hidden[next_hidden] == j) {
                        value = (h >> next_hidden) & 1;
                        ++next_hidden;
                    }
                    const double theta = model.factor_params.at(factors[j]);
                    const double p_on = (ell >> parent[j]) & 1 ? theta : 1.0 - theta;
                    p *= value ? p_on : 1.0 - p_on;
                }
                sum[r] += p;
            }
        }
    }
    return {std::log(sum[0]), std::log(sum[1])};
}

double cbn_posterior_bruteforce(const LatentBayesModel& model, const EvidenceSet& evidence) {
    const auto l = cbn_likelihoods_bruteforce(model, evidence);
    const double a = std::exp(l.log_o1);
    const double b = std::exp(l.log_o2);
    return (0.5 * a) / (0.5 * a + 0.5 * b);
}

OutcomeCpt outcome_cpt_from_latents(const std::vector<LatentVariable>& latents) {
    const std::size_t k = latents.size();
    if (k > 20) throw DomainError("outcome CPT limited to 20 latents");
    std::vector<double> on(k), off(k);
    for (std::size_t i = 0; i < k; ++i) {
        require_open_unit(latents[i].p_given_o1, "P(L=1|O1) of " + latents[i].name);
        require_open_unit(latents[i].p_given_o2, "P(L=1|O2) of " + latents[i].name);
        on[i] = std::log(latents[i].p_given_o1) - std::log(latents[i].p_given_o2);
        off[i] = std::log1p(-latents[i].p_given_o1) - std::log1p(-latents[i].p_given_o2);
    }
    OutcomeCpt cpt;
    const std::size_t rows = std::size_t{1} << k;
    cpt.p_o1.resize(rows);
    cpt.p_o2.resize(rows);
    for (std::size_t ell = 0; ell < rows; ++ell) {
        double x = 0.0;
        for (std::size_t i = 0; i < k; ++i) x += (ell >> i) & 1 ? on[i] : off[i];
        if (x <= 0.0) {
            cpt.p_o1[ell] = 1.0 / (1.0 + std::exp(-x));
            cpt.p_o2[ell] = 1.0 - cpt.p_o1[ell];
        } else {
            cpt.p_o2[ell] = 1.0 / (1.0 + std::exp(x));
            cpt.p_o1[ell] = 1.0 - cpt.p_o2[ell];
        }
    }
    return cpt;
}

std::pair<double, double> latent_cpt_from_counts(double c1, double c2, double c_neutral, double epsilon) {
    if (c1 < 0 || c2 < 0 || c_neutral < 0) throw DomainError("counts must be non-negative");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    const double t1 = c1 + 0.5 * c_neutral + epsilon;
    const double t2 = c2 + 0.5 * c_neutral + epsilon;
    return {t1 / (t1 + t2), t2 / (t1 + t2)};
}

CovarianceReport shared_latent_covariance(double beta, double theta_a, double theta_b) {
    require_open_unit(beta, "beta");
    require_open_unit(theta_a, "theta_a");
    require_open_unit(theta_b, "theta_b");
    CovarianceReport r;
    r.covariance = beta * (1.0 - beta) * (2.0 * theta_a - 1.0) * (2.0 * theta_b - 1.0);
    r.joint = beta * theta_a * theta_b + (1.0 - beta) * (1.0 - theta_a) * (1.0 - theta_b);
    r.marginal_a = beta * theta_a + (1.0 - beta) * (1.0 - theta_a);
    r.marginal_b = beta * theta_b + (1.0 - beta) * (1.0 - theta_b);
    return r;
}

LikelihoodRatioReport implied_lr_and_log_odds_bound(const std::vector<double>& phis,
                                                    const std::optional<std::vector<double>>& true_lrs) {
    LikelihoodRatioReport r;
    for (double phi : phis) {
        require_open_unit(phi, "phi");
        r.lrs.push_back(phi / (1.0 - phi));
    }
    if (true_lrs) {
        if (true_lrs->size() != phis.size()) throw DomainError("true likelihood ratios differ in length");
        double bound = 0.0;
        for (std::size_t i = 0; i < phis.size(); ++i) {
            if (!((*true_lrs)[i] > 0.0)) throw DomainError("likelihood ratios must be positive");
            bound += std::abs(std::log(r.lrs[i]) - std::log((*true_lrs)[i]));
        }
        r.bound = bound;
    }
    return r;
}

double aggregate_lop(double p_nb, double p_cbn, double w_nb, double w_cbn) {
    if (!(w_nb >= 0.0 && w_cbn >= 0.0) || std::abs(w_nb + w_cbn - 1.0) > 1e-9) {
        throw DomainError("LOP weights must be non-negative and sum to 1");
    }
    if (!(p_nb >= 0.0 && p_nb <= 1.0 && p_cbn >= 0.0 && p_cbn <= 1.0)) {
        throw DomainError("LOP inputs must be probabilities");
    }
    const double p = w_nb * p_nb + w_cbn * p_cbn;
    return std::clamp(p, std::min(p_nb, p_cbn), std::max(p_nb, p_cbn));
}

double aggregate_bma(std::pair<double, double> nb, std::pair<double, double> cbn) {
    for (const auto& [a, b] : {nb, cbn}) {
        if (!(a >= 0.0 && b >= 0.0) || std::abs(a + b - 1.0) > 1e-9) {
            throw DomainError("BMA inputs must be outcome distributions");
        }
    }
    const double ev_nb = 0.5 * nb.first * nb.second;
    const double ev_cbn = 0.5 * cbn.first * cbn.second;
    const double total = ev_nb + ev_cbn;
    if (!(total > 0.0)) throw DomainError("both model evidences vanish");
    const double p = (ev_nb / total) * nb.first + (ev_cbn / total) * cbn.first;
    return std::clamp(p, std::min(nb.first, cbn.first), std::max(nb.first, cbn.first));
}

}  // namespace anchor::inference
