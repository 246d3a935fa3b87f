#include "anchor/gateway/prompts.hpp"

#include <fstream>
#include <sstream>

#include "anchor/domain/errors.hpp"
#include "internal/json_fwd.hpp"

namespace anchor::gateway {
namespace {

ChatTurn user(std::string text) { return {"user", std::move(text)}; }
ChatTurn assistant(std::string text) { return {"assistant", std::move(text)}; }

PromptTemplate sentence_gen() {
    return {
        "You are an AI assistant that helps people make decisions.\n"
        "Generate {n} diverse supporting or refuting sentences for scenario: {scenario}, comparing "
        "'{outcome1}' vs '{outcome2}'.",
        {
            user("Scenario: Alice is training for a marathon.\n"
                 "Outcome: Running on a treadmill improves her endurance.\n"
                 "Opposite Outcome: Running on a treadmill does not improve her endurance.\n"
                 "Generate 2 sentences."),
            assistant("1. Treadmill training allows Alice to maintain a consistent pace and monitor heart rate, "
                      "boosting her aerobic capacity.\n"
                      "2. The treadmill's adjustable incline simulates hill workouts, increasing leg strength and "
                      "stamina."),
            user("Scenario: Bob studies every evening.\n"
                 "Outcome: Studying in short, focused bursts enhances retention.\n"
                 "Opposite Outcome: Studying in short, focused bursts does not enhance retention.\n"
                 "Generate 2 sentences."),
            assistant("1. Brief study sessions with breaks prevent mental fatigue and improve long-term recall.\n"
                      "2. Frequent reviews in small intervals reinforce memory pathways, aiding retention."),
        },
        "Scenario: {scenario}\nOutcome: {outcome1}\nOpposite Outcome: {outcome2}\nGenerate {n} sentences.",
    };
}

PromptTemplate factor_extract() {
    return {
        "Extract distinct factors from these sentences. Think step by step about what factors are mentioned, "
        "then provide your final answer as a JSON array.",
        {
            user("Extract distinct factors from these sentences as a JSON array.\n"
                 "1. Treadmill training allows maintaining a consistent pace and monitoring heart rate, boosting "
                 "aerobic capacity.\n"
                 "2. The treadmill's adjustable incline simulates hill workouts, increasing leg strength and "
                 "stamina."),
            assistant("Let me analyze these sentences to identify the key factors:\n"
                      "- Pace consistency (ability to maintain steady speed)\n"
                      "- Heart rate monitoring (tracking cardiovascular response)\n"
                      "- Adjustable incline (variable difficulty/terrain simulation)\n"
                      "- Leg strength (muscle development)\n"
                      "Final answer: [\"Pace consistency\",\"Heart rate monitoring\",\"Adjustable incline\","
                      "\"Leg strength\"]"),
            user("Extract distinct factors from these sentences as a JSON array.\n"
                 "1. Group work requires coordination between team members.\n"
                 "2. Individual tasks allow for personal control and efficiency."),
            assistant("Let me identify the key factors from these sentences:\n"
                      "- Coordination requirements (need for team synchronization)\n"
                      "- Personal control (individual autonomy)\n"
                      "- Efficiency (productivity/effectiveness)\n"
                      "- Team collaboration (working together)\n"
                      "Final answer: [\"Coordination requirements\",\"Personal control\",\"Efficiency\","
                      "\"Team collaboration\"]"),
        },
        "Extract distinct factors from these sentences as a JSON array.\n{sentences}",
    };
}

PromptTemplate label_vote() {
    return {
        "Decide which outcome the factor supports. Reason briefly (1-2 sentences), then provide your final "
        "answer as a JSON object. Keep the explanation as short as possible, no extra commentary.",
        {
            user("Scenario: Alice trains for a marathon.\n"
                 "Outcome1: Treadmill running improves endurance.\n"
                 "Outcome2: Treadmill running does not improve endurance.\n"
                 "Factor: Pace consistency\n"
                 "Decide which outcome this factor supports: Outcome1, Outcome2, or Both. Think step by step, "
                 "then answer in JSON."),
            assistant("Pace consistency forces a steady speed, building aerobic capacity and sustained effort.\n"
                      "Final answer: {\"Pace consistency\": \"Outcome1\"}"),
            user("Scenario: Alice trains for a marathon.\n"
                 "Outcome1: Treadmill running improves endurance.\n"
                 "Outcome2: Treadmill running does not improve endurance.\n"
                 "Factor: Weather conditions\n"
                 "Decide which outcome this factor supports: Outcome1, Outcome2, or Both. Think step by step, "
                 "then answer in JSON."),
            assistant("Treadmill gives consistent conditions, yet outdoor weather readies race adaptability.\n"
                      "Final answer: {\"Weather conditions\": \"Both\"}"),
        },
        "Scenario: {scenario}\nOutcome1: {outcome1}\nOutcome2: {outcome2}\nFactor: {factor}\n"
        "Decide which outcome this factor supports: Outcome1, Outcome2, or Both. Think step by step, then "
        "answer in JSON.",
    };
}

PromptTemplate theme() {
    return {
        "Generate a concise English theme name (1-3 words) that captures the common topic of these factors.\n"
        "Return only the theme name, no explanation.",
        {
            user("Generate a theme name for these related factors:\n"
                 "[\"energy expenditure\", \"energy transfer efficiency\"]"),
            assistant("Energy Efficiency"),
            user("Generate a theme name for these related factors:\n"
                 "[\"precision control\", \"better control (accuracy)\"]"),
            assistant("Control Precision"),
        },
        "Generate a theme name for these related factors:\n{factors}",
    };
}

PromptTemplate prune() {
    return {
        "You curate a factor list for the scenario: {scenario}. Within the given cluster, remove factors that "
        "repeat the meaning of another factor in the same cluster, keeping the clearest wording. Do not remove "
        "factors that carry distinct information. Think step by step, then write 'Final answer:' followed by a "
        "JSON array of the factors to keep, copied exactly.",
        {
            user("Theme: Energy Efficiency\n"
                 "Factors: [\"energy efficiency\", \"energy efficiency (overall)\", \"heat loss\"]\n"
                 "Support labels: {\"energy efficiency\": \"Outcome1\", \"energy efficiency (overall)\": "
                 "\"Outcome1\", \"heat loss\": \"Outcome2\"}\n"
                 "Return the factors to keep."),
            assistant("\"energy efficiency (overall)\" restates \"energy efficiency\"; \"heat loss\" is distinct.\n"
                      "Final answer: [\"energy efficiency\", \"heat loss\"]"),
        },
        "Theme: {theme}\nFactors: {factors}\nSupport labels: {labels}\nReturn the factors to keep.",
    };
}

PromptTemplate map_vote() {
    const std::string task =
        "Task: Select the factor list that is most reasonably related to the given condition. Think step by "
        "step about each factor's relevance, then provide your selection. Please respond with your reasoning "
        "followed by Final answer: and a JSON object in this exact format: {\"answer\": [\"factor1\", "
        "\"factor2\", ...]}.";
    return {
        "You are an expert at analyzing logical relationships between conditions and factors. Given a "
        "condition and a list of candidate factors, select factors that have reasonable connections to the "
        "condition. Be inclusive rather than restrictive.",
        {
            user("Scenario: A student is preparing for final exams.\n"
                 "Condition: The student spends more time in the library.\n"
                 "Candidate factors: [\"Better time management\", \"More stress\", \"Increased social "
                 "activities\"]\n" +
                 task),
            assistant("Let me analyze each factor:\n"
                      "- \"Better time management\": more library time suggests focused, organized study. "
                      "Directly related.\n"
                      "- \"More stress\": library time is a positive study behavior, not a sign of stress.\n"
                      "- \"Increased social activities\": libraries are quiet study spaces.\n"
                      "Final answer: {\"answer\": [\"Better time management\"]}"),
            user("Scenario: A company introduces remote working policies.\n"
                 "Condition: Employees can work from home twice a week.\n"
                 "Candidate factors: [\"Improved work-life balance\", \"Reduced office costs\", \"More "
                 "commuting\"]\n" +
                 task),
            assistant("Let me evaluate each factor:\n"
                      "- \"Improved work-life balance\": saved commute time and flexibility. Directly related.\n"
                      "- \"Reduced office costs\": less office space is needed. A logical consequence.\n"
                      "- \"More commuting\": contradicted, commuting goes down.\n"
                      "Final answer: {\"answer\": [\"Improved work-life balance\",\"Reduced office costs\"]}"),
        },
        "Scenario: {scenario}\nCondition: {condition}\nCandidate factors: {factors}\n" + task,
    };
}

PromptTemplate reflect() {
    const std::string task =
        "Task: Review and keep factors reasonably related to the condition. Think step by step about each "
        "factor's relevance, then 'Final answer:' with a JSON array.";
    return {
        "You are performing a self-reflection task. Given a condition and a list of initially selected factors, "
        "review each factor with a LENIENT approach. Keep factors that have ANY reasonable connection to the "
        "condition. Only remove factors that are clearly irrelevant or contradictory. When uncertain, keep the "
        "factor. Think step by step about each factor, then provide your reasoning followed by 'Final answer:' "
        "and a JSON array of the factors to keep.",
        {
            user("Condition: City implements a bike-sharing program.\n"
                 "Initially selected factors: [\"Increased bike usage\", \"Higher car sales\", \"More traffic "
                 "jams\"]\n" +
                 task),
            assistant("\"Increased bike usage\" is the direct result of more shared bikes, keep it.\n"
                      "\"Higher car sales\" has no clear link to bike sharing, remove it.\n"
                      "\"More traffic jams\" could occur if road space shifts to bikes, keep it.\n"
                      "Final answer: [\"Increased bike usage\", \"More traffic jams\"]"),
            user("Condition: Students study in a quiet library.\n"
                 "Initially selected factors: [\"Better concentration\", \"Distractions from phones\", "
                 "\"Improved retention\", \"Reduced social interaction\"]\n" +
                 task),
            assistant("\"Better concentration\" follows from a quiet space, keep it.\n"
                      "\"Distractions from phones\" contradicts the setting, remove it.\n"
                      "\"Improved retention\" arises from focused study, keep it.\n"
                      "\"Reduced social interaction\" is a likely side-effect of silence, keep it.\n"
                      "Final answer: [\"Better concentration\", \"Improved retention\", \"Reduced social "
                      "interaction\"]"),
        },
        "Condition: {condition}\nInitially selected factors: {factors}\n" + task,
    };
}

PromptTemplate phi_elicit() {
    return {
        "",
        {
            user("Given the scenario: \"Comparing LED bulbs vs incandescent bulbs in home lighting.\"\n"
                 "For each of the following factor values, please estimate the probability (a float between 0 "
                 "and 1) that it supports Outcome1 (LED bulbs are more advantageous) rather than Outcome2 "
                 "(incandescent bulbs are more advantageous). Return a JSON mapping.\n"
                 "Factor values:\n"
                 "[\"Initial cost per bulb\", \"Energy consumption per hour\", \"Lifespan hours\", \"Color "
                 "rendering index\", \"Warm color temperature\", \"Instant full brightness\", \"Dimmable "
                 "compatibility\", \"Mercury content\", \"Heat generation\", \"Availability\"]"),
            assistant("Thought: LEDs excel in low energy use, longevity, low heat output, and no mercury, but cost "
                      "more upfront, may have lower CRI, and vary in warmth, dimmability, and availability.\n"
                      "Final answer:\n"
                      "{\n"
                      "\"Initial cost per bulb\": 0.30, \"Energy consumption per hour\": 0.95,\n"
                      "\"Lifespan hours\": 0.90, \"Color rendering index\": 0.25,\n"
                      "\"Warm color temperature\": 0.40, \"Instant full brightness\": 0.50,\n"
                      "\"Dimmable compatibility\": 0.35, \"Mercury content\": 0.85,\n"
                      "\"Heat generation\": 0.88, \"Availability\": 0.45\n"
                      "}"),
        },
        "Given the scenario: {scenario}\n"
        "For each of the following factor values, please estimate the probability (a float between 0 and 1) "
        "that it supports Outcome1: {outcome1} rather than Outcome2: {outcome2}.\n"
        "As reference (but not absolute) here are some initial estimates:\n{prior_text}\n"
        "Think step by step about each factor's relation to the outcomes, and provide your probability "
        "estimates. Return a JSON mapping.\n"
        "Factor values:\n{factors}",
    };
}

PromptTemplate latent_discover() {
    const std::string ask =
        "Please identify latent variables and assign each factor to a latent. Then return JSON with fields:\n"
        "  latents: [{\"name\": string, \"factors\": [...]}, ...]\n";
    return {
        "Please perform a brief chain-of-thought (step-by-step reasoning) before outputting the final JSON.\n"
        "You are an AI assistant tasked with identifying latent variables and assigning each latent only "
        "factors drawn from the provided list. Do NOT output any edges. Return a JSON object with a single "
        "field:\n"
        "  latents: an array of objects, each with:\n"
        "    - name: string\n"
        "    - factors: array of strings (each chosen from the provided Factors list)\n"
        "Ensure the JSON parses correctly and strictly follows this schema.",
        {
            user(ask + "Factors: [\"Nutrition\", \"Vitamins\", \"Taste\", \"Convenience\"]"),
            assistant("Thought: Nutrition and Vitamins both relate to health aspects of food, while Taste and "
                      "Convenience relate to user enjoyment and practicality.\n"
                      "Final answer:\n"
                      "{\n\"latents\": [\n"
                      "  {\"name\": \"HealthLat\", \"factors\": [\"Nutrition\",\"Vitamins\"]},\n"
                      "  {\"name\": \"EnjoyLat\", \"factors\": [\"Taste\",\"Convenience\"]}\n"
                      "]\n}"),
            user(ask + "Factors: [\"Usability\", \"Security\", \"Maintainability\", \"Portability\", "
                       "\"Reliability\"]"),
            assistant("Thought: Usability and Portability focus on user experience and access, Reliability and "
                      "Maintainability focus on software quality over time, and Security is a distinct concern.\n"
                      "Final answer:\n"
                      "{\n\"latents\": [\n"
                      "  {\"name\": \"UXLat\", \"factors\": [\"Usability\",\"Portability\"]},\n"
                      "  {\"name\": \"QualityLat\", \"factors\": [\"Reliability\",\"Maintainability\"]},\n"
                      "  {\"name\": \"SecurityLat\", \"factors\": [\"Security\"]}\n"
                      "]\n}"),
        },
        ask + "Factors: {factors}",
    };
}

PromptTemplate latent_elicit() {
    return {
        "Please perform a brief chain-of-thought (step-by-step) before outputting the final JSON:\n"
        "You are an AI assistant. You will be given:\n"
        "  - A list of latents where each latent has its name and the list of factor descriptions it groups\n"
        "  - Two competing outcomes (Outcome1 vs. Outcome2)\n"
        "Your task: Think through the semantic content of the factors relative to the outcomes, and estimate "
        "for each latent a probability pair [p1, p0]:\n"
        "  - p1 = probability the latent supports Outcome1\n"
        "  - p0 = probability the latent supports Outcome2\n"
        "Begin your answer with \"Thought:\" to show your reasoning, then output exactly a JSON object mapping "
        "each latent name to its [p1, p0] (no extra text).",
        {
            user("Latents with factors:\n"
                 "[\n"
                 "  {\"name\":\"Performance\", \"factors\":[\"Faster processing\",\"Efficient resource use\"]},\n"
                 "  {\"name\":\"Stability\", \"factors\":[\"Crash reports\",\"Memory leaks\"]}\n"
                 "]\n"
                 "Outcome1: The system improves performance.\n"
                 "Outcome2: The system does not improve performance."),
            assistant("Thought: Performance groups factors that directly indicate faster and more efficient "
                      "operation, strongly supporting Outcome1. Stability lists issues that undermine "
                      "reliability, which suggests performance might not improve overall.\n"
                      "Final answer:\n"
                      "{\n  \"Performance\": [0.85, 0.15],\n  \"Stability\": [0.30, 0.70]\n}"),
            user("Latents with factors:\n"
                 "[\n"
                 "  {\"name\":\"HealthLat\",\"factors\":[\"Nutrition benefits\"]},\n"
                 "  {\"name\":\"EnjoyLat\", \"factors\":[\"Taste appeal\",\"Fun presentation\"]}\n"
                 "]\n"
                 "Outcome1: Healthy eating is fun.\n"
                 "Outcome2: Healthy eating is not fun."),
            assistant("Thought: Nutrition benefits relate to health but don't guarantee fun, so HealthLat is "
                      "neutral to slightly positive. EnjoyLat centers on taste and fun, strongly supporting "
                      "Outcome1.\n"
                      "Final answer:\n"
                      "{\n  \"HealthLat\": [0.55, 0.45],\n  \"EnjoyLat\": [0.85, 0.15]\n}"),
        },
        "Latents with factors:\n{latents}\nOutcome1: {outcome1}\nOutcome2: {outcome2}",
    };
}

}  // namespace

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary library;
    library.templates_[PromptTag::SentenceGen] = sentence_gen();
    library.templates_[PromptTag::FactorExtract] = factor_extract();
    library.templates_[PromptTag::LabelVote] = label_vote();
    library.templates_[PromptTag::Theme] = theme();
    library.templates_[PromptTag::Prune] = prune();
    library.templates_[PromptTag::MapVote] = map_vote();
    library.templates_[PromptTag::Reflect] = reflect();
    library.templates_[PromptTag::PhiElicit] = phi_elicit();
    library.templates_[PromptTag::LatentDiscover] = latent_discover();
    library.templates_[PromptTag::LatentElicit] = latent_elicit();
    return library;
}

int PromptLibrary::load_overrides(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw ConfigError("prompt directory does not exist: " + directory.string());
    }
    int loaded = 0;
    for (PromptTag tag : kAllPromptTags) {
        const auto path = directory / (std::string(to_string(tag)) + ".json");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        try {
            const Json root = Json::parse(buffer.str());
            PromptTemplate prompt = templates_.at(tag);
            if (root.contains("system")) prompt.system = root.at("system").get<std::string>();
            if (root.contains("user")) prompt.user = root.at("user").get<std::string>();
            if (root.contains("shots")) {
                prompt.shots.clear();
                for (const auto& shot : root.at("shots")) {
                    prompt.shots.push_back({shot.at("role").get<std::string>(), shot.at("text").get<std::string>()});
                }
            }
            templates_[tag] = std::move(prompt);
            ++loaded;
        } catch (const Json::exception& e) {
            throw ConfigError("malformed prompt override " + path.string() + ": " + e.what());
        }
    }
    return loaded;
}

const PromptTemplate& PromptLibrary::get(PromptTag tag) const { return templates_.at(tag); }

void PromptLibrary::set(PromptTag tag, PromptTemplate prompt) { templates_[tag] = std::move(prompt); }

ChatRequest PromptLibrary::render(PromptTag tag, const PromptVars& vars, double temperature, int sample) const {
    const auto& prompt = get(tag);
    ChatRequest request;
    request.tag = tag;
    request.system = substitute(prompt.system, vars);
    request.turns = prompt.shots;
    request.turns.push_back({"user", substitute(prompt.user, vars)});
    request.temperature = temperature;
    request.sample = sample;
    return request;
}

std::string substitute(const std::string& pattern, const PromptVars& vars) {
    std::string out;
    out.reserve(pattern.size());
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto close = pattern.find('}', i + 1);
            if (close != std::string::npos) {
                auto it = vars.find(pattern.substr(i + 1, close - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(pattern[i++]);
    }
    return out;
}

std::string json_string_array(const std::vector<std::string>& items) {
    return Json(items).dump();
}

}  // namespace anchor::gateway
