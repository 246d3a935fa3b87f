#include "anchor/domain/persistence.hpp"

#include <fstream>
#include <sstream>

#include "anchor/domain/errors.hpp"
#include "internal/json_fwd.hpp"

namespace anchor {
namespace {

constexpr const char* kFormatName = "anchor.factor_space";

Json factor_to_json(const Factor& factor) {
    Json j = {{"id", factor.id}, {"text", factor.text}, {"provenance", to_string(factor.provenance)}};
    j["label"] = factor.label ? Json(to_string(*factor.label)) : Json(nullptr);
    j["phi"] = factor.phi ? Json(*factor.phi) : Json(nullptr);
    return j;
}

Factor factor_from_json(const Json& j) {
    Factor factor;
    factor.id = j.at("id").get<std::string>();
    factor.text = j.at("text").get<std::string>();
    if (!j.at("label").is_null()) {
        auto label = factor_label_from_string(j.at("label").get<std::string>());
        if (!label) throw Error("unknown factor label in document");
        factor.label = label;
    }
    if (!j.at("phi").is_null()) factor.phi = j.at("phi").get<double>();
    auto provenance = provenance_from_string(j.at("provenance").get<std::string>());
    if (!provenance) throw Error("unknown provenance in document");
    factor.provenance = *provenance;
    return factor;
}

}  // namespace

std::string space_document_to_json(const SpaceDocument& document) {
    const auto& space = document.space;
    Json clusters = Json::array();
    for (const auto& cluster : space.clusters) {
        Json c = {{"theme", cluster.theme}, {"members", cluster.members}};
        c["prototype"] = cluster.prototype ? Json(*cluster.prototype) : Json(nullptr);
        clusters.push_back(std::move(c));
    }
    Json factors = Json::object();
    for (const auto& [id, factor] : space.factors) factors[id] = factor_to_json(factor);

    Json root = {
        {"format", kFormatName},
        {"version", kFactorSpaceFormatVersion},
        {"scenario",
         {{"id", document.scenario.id},
          {"description", document.scenario.description},
          {"outcome1", document.scenario.outcome1},
          {"outcome2", document.scenario.outcome2}}},
        {"factor_space",
         {{"scenario_id", space.scenario_id},
          {"clusters", std::move(clusters)},
          {"unclustered", space.unclustered},
          {"factors", std::move(factors)},
          {"stats",
           {{"rounds_used", space.stats.rounds_used},
            {"factors_generated", space.stats.factors_generated},
            {"clusters_found", space.stats.clusters_found}}}}},
    };
    return root.dump(2);
}

SpaceDocument space_document_from_json(const std::string& json) {
    try {
        const Json root = Json::parse(json);
        if (root.at("format") != kFormatName) throw Error("not a factor space document");
        const int version = root.at("version").get<int>();
        if (version != kFactorSpaceFormatVersion) {
            throw Error("unsupported factor space version " + std::to_string(version));
        }
        SpaceDocument document;
        const auto& s = root.at("scenario");
        document.scenario = {s.at("id").get<std::string>(), s.at("description").get<std::string>(),
                             s.at("outcome1").get<std::string>(), s.at("outcome2").get<std::string>()};

        const auto& fs = root.at("factor_space");
        auto& space = document.space;
        space.scenario_id = fs.at("scenario_id").get<std::string>();
        for (const auto& c : fs.at("clusters")) {
            FactorCluster cluster;
            cluster.theme = c.at("theme").get<std::string>();
            cluster.members = c.at("members").get<std::vector<FactorId>>();
            if (!c.at("prototype").is_null()) cluster.prototype = c.at("prototype").get<Vector>();
            space.clusters.push_back(std::move(cluster));
        }
        space.unclustered = fs.at("unclustered").get<std::vector<FactorId>>();
        for (const auto& [id, f] : fs.at("factors").items()) space.factors.emplace(id, factor_from_json(f));
        const auto& stats = fs.at("stats");
        space.stats.rounds_used = stats.at("rounds_used").get<int>();
        space.stats.factors_generated = stats.at("factors_generated").get<std::size_t>();
        space.stats.clusters_found = stats.at("clusters_found").get<std::size_t>();
        return document;
    } catch (const Json::exception& e) {
        throw Error(std::string("malformed factor space document: ") + e.what());
    }
}

void write_space_document(const std::filesystem::path& path, const SpaceDocument& document) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << space_document_to_json(document) << '\n';
}

SpaceDocument read_space_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return space_document_from_json(buffer.str());
}

}  // namespace anchor
