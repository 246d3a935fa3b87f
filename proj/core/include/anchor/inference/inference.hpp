#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchor/domain/config.hpp"
#include "anchor/domain/types.hpp"
#include "anchor/gateway/gateway.hpp"
#include "anchor/inference/model.hpp"
#include "anchor/mapping/mapping.hpp"

namespace anchor::inference {

enum class Decision { O1, O2, Unknown };

std::string_view to_string(Decision decision) noexcept;

struct ElicitedPhi {
    double phi = 0.5;
    Provenance provenance = Provenance::LabelInitialized;

    friend bool operator==(const ElicitedPhi&, const ElicitedPhi&) = default;
};

inline constexpr std::size_t kPhiChunk = 40;

// PhiElicit queries in chunks of at most 40 factors; values are clamped.
// Factors the model does not mention keep their label prior.
std::map<FactorId, ElicitedPhi> elicit_factor_posteriors(gateway::Gateway& gw, const Scenario& scenario,
                                                         const std::vector<Factor>& factors, double clamp);

struct LatentAssignment {
    std::string name;
    std::vector<FactorId> members;

    friend bool operator==(const LatentAssignment&, const LatentAssignment&) = default;
};

inline constexpr const char* kResidualLatent = "ResidualLat";
inline constexpr const char* kAllLatent = "AllLat";

// Partition of `factors` proposed by one LatentDiscover query. First
// assignment wins, unknown names are dropped, leftovers go to ResidualLat;
// failure yields a single AllLat.
std::vector<LatentAssignment> discover_latents(gateway::Gateway& gw, const std::vector<Factor>& factors);

// One LatentElicit query; latents it omits get count-based parameters from
// their members' labels (Laplace count epsilon_smooth). Every value clamped.
std::vector<LatentVariable> elicit_latent_conditionals(gateway::Gateway& gw, const Scenario& scenario,
                                                       const std::vector<LatentAssignment>& latents,
                                                       const std::map<FactorId, Factor>& factors,
                                                       const InferenceConfig& config);

struct PosteriorReport {
    std::string condition_id;
    std::optional<double> p_nb;
    std::optional<double> p_cbn;
    std::optional<double> p_final;
    bool abstained = true;
    Decision decision = Decision::Unknown;
    std::map<FactorId, ElicitedPhi> phis;
    std::vector<LatentVariable> latents;

    friend bool operator==(const PosteriorReport&, const PosteriorReport&) = default;
};

// Applies the abstention threshold tau to max(p, 1 - p) and the argmax rule
// (exact 0.5 is Unknown).
Decision decide(double p_final, double tau, bool* abstained);

PosteriorReport infer(gateway::Gateway& gw, const Scenario& scenario, const FactorSpace& space,
                      const mapping::MappingResult& mapping, const InferenceConfig& config);

std::string posterior_report_to_json(const PosteriorReport& report);
PosteriorReport posterior_report_from_json(const std::string& json);

}  // namespace anchor::inference
