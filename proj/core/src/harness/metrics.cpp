#include "anchor/harness/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "anchor/domain/errors.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::harness {
namespace {

void finish(ClassScore& s) {
    s.precision = s.tp + s.fp > 0 ? static_cast<double>(s.tp) / (s.tp + s.fp) : 0.0;
    s.recall = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / (s.tp + s.fn) : 0.0;
    const int denom = 2 * s.tp + s.fp + s.fn;
    s.f1 = denom > 0 ? 2.0 * s.tp / denom : 0.0;
}

double micro_f1(const std::map<std::string, ClassScore>& scores) {
    int tp = 0, fp = 0, fn = 0;
    for (const auto& [name, s] : scores) {
        tp += s.tp;
        fp += s.fp;
        fn += s.fn;
    }
    const int denom = 2 * tp + fp + fn;
    return denom > 0 ? 2.0 * tp / denom : 0.0;
}

double balanced(const std::map<std::string, ClassScore>& scores) {
    double total = 0.0;
    int classes = 0;
    for (const auto& [name, s] : scores) {
        if (s.tp + s.fn == 0) continue;
        total += s.recall;
        ++classes;
    }
    return classes > 0 ? total / classes : 0.0;
}

}  // namespace

std::string_view to_string(PairPrediction prediction) noexcept {
    switch (prediction) {
        case PairPrediction::Context1: return "Context1";
        case PairPrediction::Context2: return "Context2";
        case PairPrediction::Same: return "Same";
        case PairPrediction::Unknown: break;
    }
    return "Unknown";
}

PairPrediction classify_pairwise(const inference::PosteriorReport& first, const inference::PosteriorReport& second,
                                 double eps_same) {
    if (first.abstained || second.abstained || !first.p_final || !second.p_final) return PairPrediction::Unknown;
    const double p1 = *first.p_final;
    const double p2 = *second.p_final;
    if (p1 - p2 > eps_same) return PairPrediction::Context1;
    if (p2 - p1 > eps_same) return PairPrediction::Context2;
    return PairPrediction::Same;
}

MetricsReport evaluate_pairwise(const std::vector<PairPrediction>& predictions, const std::vector<PairGold>& golds,
                                const std::vector<bool>& mapped) {
    if (predictions.size() != golds.size()) throw LengthMismatch("predictions and golds differ in length");
    if (!mapped.empty() && mapped.size() != golds.size()) throw LengthMismatch("mapped flags differ in length");
    MetricsReport r;
    r.instances = golds.size();
    for (PairGold g : {PairGold::Context1, PairGold::Context2, PairGold::Same}) r.per_class[std::string(to_string(g))];

    std::size_t correct = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const std::string gold(to_string(golds[i]));
        const bool known = predictions[i] != PairPrediction::Unknown;
        const bool is_mapped = mapped.empty() ? known : static_cast<bool>(mapped[i]);
        if (is_mapped) ++covered;
        if (known && to_string(predictions[i]) == gold) {
            ++r.per_class[gold].tp;
            ++correct;
            continue;
        }
        ++r.per_class[gold].fn;
        if (known) ++r.per_class[std::string(to_string(predictions[i]))].fp;
    }
    for (auto& [name, s] : r.per_class) finish(s);
    r.micro_f1 = micro_f1(r.per_class);
    if (!golds.empty()) {
        r.accuracy = static_cast<double>(correct) / static_cast<double>(golds.size());
        r.coverage = static_cast<double>(covered) / static_cast<double>(golds.size());
    }
    r.unknown_rate = 1.0 - r.coverage;
    r.balanced_accuracy = balanced(r.per_class);
    return r;
}

MetricsReport evaluate_decision(const std::vector<inference::PosteriorReport>& reports,
                                const std::vector<DecisionGold>& golds, double tau_dec, DecisionMode mode) {
    if (reports.size() != golds.size()) throw LengthMismatch("reports and golds differ in length");
    MetricsReport r;
    r.instances = golds.size();
    const std::string o1(to_string(DecisionGold::O1));
    const std::string o2(to_string(DecisionGold::O2));
    r.per_class[o1];
    r.per_class[o2];

    std::size_t correct = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto& rep = reports[i];
        const bool has_p = rep.p_final.has_value() && !rep.abstained;
        if (has_p) ++covered;
        std::optional<DecisionGold> predicted;
        if (mode == DecisionMode::Argmax) {
            if (has_p && *rep.p_final != 0.5) {
                predicted = *rep.p_final > 0.5 ? DecisionGold::O1 : DecisionGold::O2;
            }
        } else {
            predicted = has_p && *rep.p_final > tau_dec ? DecisionGold::O1 : DecisionGold::O2;
        }
        const std::string gold(to_string(golds[i]));
        if (predicted && *predicted == golds[i]) {
            ++r.per_class[gold].tp;
            ++correct;
        } else {
            ++r.per_class[gold].fn;
            if (predicted) ++r.per_class[std::string(to_string(*predicted))].fp;
        }
    }
    for (auto& [name, s] : r.per_class) finish(s);
    r.micro_f1 = micro_f1(r.per_class);
    if (!golds.empty()) {
        r.accuracy = static_cast<double>(correct) / static_cast<double>(golds.size());
        r.coverage = static_cast<double>(covered) / static_cast<double>(golds.size());
    }
    r.unknown_rate = 1.0 - r.coverage;
    r.balanced_accuracy = balanced(r.per_class);
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    Json classes = Json::object();
    for (const auto& [name, s] : r.per_class) {
        classes[name] = {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"precision", s.precision},
                         {"recall", s.recall}, {"f1", s.f1}};
    }
    const Json j = {{"instances", r.instances},       {"per_class", classes},
                    {"micro_f1", r.micro_f1},         {"coverage", r.coverage},
                    {"unknown_rate", r.unknown_rate}, {"accuracy", r.accuracy},
                    {"balanced_accuracy", r.balanced_accuracy},
                    {"unknown_convention", "Unknown counts as a miss for the gold class in every F1"}};
    return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& json) {
    try {
        const Json j = Json::parse(json);
        MetricsReport r;
        r.instances = j.at("instances").get<std::size_t>();
        for (const auto& [name, s] : j.at("per_class").items()) {
            r.per_class[name] = {s.at("tp").get<int>(),          s.at("fp").get<int>(),
                                 s.at("fn").get<int>(),          s.at("precision").get<double>(),
                                 s.at("recall").get<double>(),   s.at("f1").get<double>()};
        }
        r.micro_f1 = j.at("micro_f1").get<double>();
        r.coverage = j.at("coverage").get<double>();
        r.unknown_rate = j.at("unknown_rate").get<double>();
        r.accuracy = j.at("accuracy").get<double>();
        r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed metrics document: ") + e.what());
    }
}

std::string metrics_table(const MetricsReport& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %6s %6s %6s %9s %9s %9s\n", "class", "tp", "fp", "fn", "precision",
                  "recall", "f1");
    out << line;
    for (const auto& [name, s] : r.per_class) {
        std::snprintf(line, sizeof line, "%-10s %6d %6d %6d %9.4f %9.4f %9.4f\n", name.c_str(), s.tp, s.fp, s.fn,
                      s.precision, s.recall, s.f1);
        out << line;
    }
    std::snprintf(line, sizeof line,
                  "instances %zu  micro_f1 %.4f  accuracy %.4f  balanced_accuracy %.4f  coverage %.4f  "
                  "unknown_rate %.4f\n",
                  r.instances, r.micro_f1, r.accuracy, r.balanced_accuracy, r.coverage, r.unknown_rate);
    out << line;
    return out.str();
}

}  // namespace anchor::harness
