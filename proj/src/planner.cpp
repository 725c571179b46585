#include "skillforge/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "skillforge/error.hpp"
#include "skillforge/hash.hpp"

namespace skillforge {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void replace_all(std::string& text, const std::string& needle, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
}

}  // namespace

const char* to_string(SubtaskStatus status) {
    switch (status) {
        case SubtaskStatus::Pending: return "pending";
        case SubtaskStatus::Active: return "active";
        case SubtaskStatus::Done: return "done";
        case SubtaskStatus::Failed: return "failed";
    }
    return "pending";
}

SubtaskStatus subtask_status_from_string(const std::string& name) {
    if (name == "pending") return SubtaskStatus::Pending;
    if (name == "active") return SubtaskStatus::Active;
    if (name == "done") return SubtaskStatus::Done;
    if (name == "failed") return SubtaskStatus::Failed;
    throw Error(ErrorCode::InvalidInput, "unknown subtask status: " + name);
}

std::string to_string(const PlannerDirective& directive) {
    switch (directive.kind) {
        case PlannerDirective::Kind::Execute:
            return "execute " + std::to_string(directive.ordinal);
        case PlannerDirective::Kind::Retry:
            return "retry " + std::to_string(directive.ordinal) + " attempt " +
                   std::to_string(directive.attempt);
        case PlannerDirective::Kind::Abort:
            return "abort: " + directive.reason;
        case PlannerDirective::Kind::Complete:
            return "complete";
    }
    return "complete";
}

void validate_plan(const TaskPlan& plan) {
    int active = 0;
    for (size_t i = 0; i < plan.subtasks.size(); ++i) {
        if (plan.subtasks[i].ordinal != static_cast<int>(i) + 1) {
            throw Error(ErrorCode::InconsistentPlanState,
                        "subtask ordinals must be contiguous from 1");
        }
        if (plan.subtasks[i].status == SubtaskStatus::Active) ++active;
    }
    if (active > 1) {
        throw Error(ErrorCode::InconsistentPlanState, "more than one active subtask");
    }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read prompt template: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

PromptTemplate PromptTemplate::from_string(std::string text) {
    for (const char* placeholder :
         {"{description}", "{relations}", "{objects}", "{instruction}"}) {
        if (text.find(placeholder) == std::string::npos) {
            throw Error(ErrorCode::InvalidInput,
                        std::string("prompt template missing placeholder ") + placeholder);
        }
    }
    PromptTemplate t;
    t.text_ = std::move(text);
    return t;
}

std::string build_prompt(const TaskInstruction& task, const SceneGraph& scene,
                         const PromptTemplate& prompt_template) {
    std::string relations;
    for (const SpatialRelation& rel : scene.relations) {
        const SceneObject* subject = scene.find_object(rel.subject_id);
        const SceneObject* object = scene.find_object(rel.object_id);
        if (subject == nullptr || object == nullptr) {
            throw Error(ErrorCode::InvalidInput,
                        "relation references unknown object in scene " + scene.scene_id);
        }
        if (!relations.empty()) relations += '\n';
        relations += subject->label;
        relations += ' ';
        relations += to_string(rel.kind);
        relations += ' ';
        relations += object->label;
    }
    if (relations.empty()) relations = "none observed";

    std::string objects;
    for (const SceneObject& obj : scene.objects) {
        if (!objects.empty()) objects += ", ";
        objects += obj.label;
    }
    if (objects.empty()) objects = "none observed";

    std::string prompt = prompt_template.text();
    replace_all(prompt, "{description}", scene.description);
    replace_all(prompt, "{relations}", relations);
    replace_all(prompt, "{objects}", objects);
    replace_all(prompt, "{instruction}", task.text);
    return prompt;
}

std::vector<std::string> parse_plan_response(const std::string& raw) {
    std::vector<std::string> steps;
    bool plan_seen = false;
    for (const std::string& raw_line : split_lines(raw)) {
        std::string line = trim(raw_line);
        if (line.empty()) continue;
        if (!plan_seen) {
            if (line != "PLAN:") {
                throw Error(ErrorCode::MalformedPlannerResponse,
                            "response must open with a PLAN: line, got: " + line);
            }
            plan_seen = true;
            continue;
        }
        if (line.rfind("NEXT:", 0) == 0) break;
        size_t dot = line.find('.');
        if (dot == std::string::npos) {
            throw Error(ErrorCode::MalformedPlannerResponse, "unnumbered plan line: " + line);
        }
        std::string number = line.substr(0, dot);
        if (number.empty() ||
            !std::all_of(number.begin(), number.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            throw Error(ErrorCode::MalformedPlannerResponse, "unnumbered plan line: " + line);
        }
        if (std::stoi(number) != static_cast<int>(steps.size()) + 1) {
            throw Error(ErrorCode::MalformedPlannerResponse,
                        "plan steps must be numbered contiguously from 1");
        }
        std::string phrase = trim(line.substr(dot + 1));
        if (phrase.empty()) {
            throw Error(ErrorCode::MalformedPlannerResponse, "empty plan step " + number);
        }
        steps.push_back(phrase);
    }
    if (!plan_seen) {
        throw Error(ErrorCode::MalformedPlannerResponse, "response has no PLAN: line");
    }
    if (steps.empty()) {
        throw Error(ErrorCode::MalformedPlannerResponse, "plan contains no steps");
    }
    return steps;
}

std::optional<int> parse_next_hint(const std::string& raw) {
    for (const std::string& raw_line : split_lines(raw)) {
        std::string line = trim(raw_line);
        if (line.rfind("NEXT:", 0) != 0) continue;
        std::string value = trim(line.substr(5));
        if (value.empty() ||
            !std::all_of(value.begin(), value.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            return std::nullopt;
        }
        return std::stoi(value);
    }
    return std::nullopt;
}

MockRulePlanner MockRulePlanner::load(const std::filesystem::path& rules_path,
                                      const Lexicon& lexicon) {
    std::ifstream in(rules_path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::FixtureMissing, "planner rule table not found: " + rules_path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput,
                    "bad planner rule table " + rules_path.string() + ": " + e.what());
    }
    MockRulePlanner planner;
    planner.lexicon_ = &lexicon;
    if (!doc.contains("rules") || !doc["rules"].is_array()) {
        throw Error(ErrorCode::InvalidInput, "planner rule table needs a rules array");
    }
    for (const nlohmann::json& entry : doc["rules"]) {
        Rule rule;
        rule.pattern = entry.at("pattern").get<std::string>();
        for (const nlohmann::json& line : entry.at("plan")) {
            rule.plan_lines.push_back(line.get<std::string>());
        }
        if (rule.plan_lines.empty()) {
            throw Error(ErrorCode::InvalidInput, "rule with empty plan: " + rule.pattern);
        }
        try {
            std::regex probe(rule.pattern, std::regex::icase);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::InvalidInput,
                        "bad rule pattern '" + rule.pattern + "': " + e.what());
        }
        planner.rules_.push_back(std::move(rule));
    }
    return planner;
}

namespace {

std::string substitute_captures(const std::string& line, const std::smatch& match) {
    std::string out;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '$' && i + 1 < line.size() &&
            std::isdigit(static_cast<unsigned char>(line[i + 1]))) {
            size_t j = i + 1;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
            int group = std::stoi(line.substr(i + 1, j - i - 1));
            if (group >= 0 && group < static_cast<int>(match.size())) {
                out += match[group].str();
            }
            i = j - 1;
        } else {
            out += line[i];
        }
    }
    return out;
}

/// Splits an instruction into sequenced clauses on explicit ordering cues
/// only, so coordinated verbs ("align and tilt") survive intact.
std::vector<std::string> split_clauses(const std::string& instruction) {
    std::string text = instruction;
    for (const char* cue : {" and then ", ", then ", "; then ", " then ", ";"}) {
        replace_all(text, cue, "\x1f");
    }
    std::vector<std::string> clauses;
    std::string clause;
    std::istringstream in(text);
    while (std::getline(in, clause, '\x1f')) {
        clause = trim(clause);
        while (!clause.empty() && (clause.back() == ',' || clause.back() == '.')) {
            clause.pop_back();
            clause = trim(clause);
        }
        // strip a trailing conjunction left over from ", and then" splits
        if (clause.size() > 4 && clause.compare(clause.size() - 4, 4, " and") == 0) {
            clause = trim(clause.substr(0, clause.size() - 4));
        }
        for (const char* lead : {"first ", "next ", "finally ", "now ", "please "}) {
            size_t n = std::strlen(lead);
            std::string lowered = clause.substr(0, std::min(n, clause.size()));
            std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (lowered == lead) clause = trim(clause.substr(n));
        }
        if (!clause.empty()) clauses.push_back(clause);
    }
    return clauses;
}

/// Replaces standalone "it"/"them" with the previous clause's object noun.
std::string resolve_pronouns(const std::string& clause, const std::string& antecedent) {
    if (antecedent.empty()) return clause;
    static const std::regex pronoun(R"(\b(it|them)\b)", std::regex::icase);
    return std::regex_replace(clause, pronoun, "the " + antecedent);
}

}  // namespace

std::string MockRulePlanner::complete(const std::string& prompt) const {
    std::string instruction;
    for (const std::string& line : split_lines(prompt)) {
        std::string t = trim(line);
        if (t.rfind("Instruction:", 0) == 0) instruction = trim(t.substr(12));
    }
    if (instruction.empty()) {
        throw Error(ErrorCode::InvalidInput,
                    "mock planner requires an 'Instruction:' line in the prompt");
    }

    std::vector<std::string> steps;
    for (const Rule& rule : rules_) {
        std::regex re(rule.pattern, std::regex::icase);
        std::smatch match;
        if (!std::regex_search(instruction, match, re)) continue;
        for (const std::string& line : rule.plan_lines) {
            steps.push_back(substitute_captures(line, match));
        }
        break;
    }

    if (steps.empty()) {
        std::string antecedent;
        for (const std::string& clause : split_clauses(instruction)) {
            std::string resolved = resolve_pronouns(clause, antecedent);
            steps.push_back(resolved);
            try {
                antecedent = canonicalize(resolved, *lexicon_).object_slot;
            } catch (const Error&) {
                // keep the raw clause; decompose surfaces the parse failure
            }
        }
    }
    if (steps.empty()) steps.push_back(instruction);

    std::string response = "PLAN:\n";
    for (size_t i = 0; i < steps.size(); ++i) {
        response += std::to_string(i + 1) + ". " + steps[i] + "\n";
    }
    response += "NEXT: 1\n";
    return response;
}

std::optional<std::string> MockRulePlanner::next_step(const std::string& status_prompt) const {
    int first_pending = 0;
    for (const std::string& raw_line : split_lines(status_prompt)) {
        std::string line = trim(raw_line);
        size_t dot = line.find('.');
        if (dot == std::string::npos || dot == 0) continue;
        std::string number = line.substr(0, dot);
        if (!std::all_of(number.begin(), number.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
            continue;
        }
        if (line.find("[active]") != std::string::npos) {
            return "NEXT: " + number;
        }
        if (first_pending == 0 && line.find("[pending]") != std::string::npos) {
            first_pending = std::stoi(number);
        }
    }
    if (first_pending > 0) return "NEXT: " + std::to_string(first_pending);
    return std::nullopt;
}

HttpLlmPlanner::HttpLlmPlanner(BackendConfig config) : config_(std::move(config)) {
    validate_config(config_);
    if (config_.backend_kind != BackendKind::Http) {
        throw Error(ErrorCode::InvalidInput, "HttpLlmPlanner requires an http backend config");
    }
}

std::string HttpLlmPlanner::complete(const std::string& prompt) const {
    nlohmann::json reply = http_post_json(config_, nlohmann::json{{"prompt", prompt}});
    if (!reply.contains("text") || !reply["text"].is_string()) {
        throw Error(ErrorCode::MalformedPlannerResponse, "planner reply lacks a text field");
    }
    return reply["text"].get<std::string>();
}

std::optional<std::string> HttpLlmPlanner::next_step(const std::string& status_prompt) const {
    return complete(status_prompt);
}

TaskPlan decompose(const TaskInstruction& task, const SceneGraph& scene,
                   const PlannerBackend& backend, const AbstractionBackend& canonicalizer,
                   const PromptTemplate& prompt_template, const DecomposeOptions& options) {
    if (trim(task.text).empty()) {
        throw Error(ErrorCode::EmptyInstruction, "task " + task.task_id + " has no instruction");
    }

    std::string prompt = build_prompt(task, scene, prompt_template);

    std::vector<std::string> phrases;
    int attempts_left = std::max(0, options.malformed_retry_limit);
    for (;;) {
        std::string raw = backend.complete(prompt);
        try {
            phrases = parse_plan_response(raw);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedPlannerResponse || attempts_left == 0) throw;
            --attempts_left;
        }
    }

    TaskPlan plan;
    plan.task = task;
    plan.scene_id = scene.scene_id;
    plan.provenance.backend_id = backend.backend_id();
    plan.provenance.prompt_hash = sha256_hex(prompt);
    for (size_t i = 0; i < phrases.size(); ++i) {
        Subtask sub;
        sub.ordinal = static_cast<int>(i) + 1;
        sub.text = phrases[i];
        sub.signature = canonicalizer.canonicalize_phrase(phrases[i]);
        plan.subtasks.push_back(std::move(sub));
    }
    return plan;
}

PlannerDirective next_directive(TaskPlan& plan, std::optional<bool> last_outcome,
                                int retry_limit) {
    validate_plan(plan);
    if (retry_limit < 0) {
        throw Error(ErrorCode::InvalidInput, "retry limit must be non-negative");
    }

    Subtask* active = nullptr;
    for (Subtask& sub : plan.subtasks) {
        if (sub.status == SubtaskStatus::Active) active = &sub;
    }

    if (active != nullptr) {
        if (!last_outcome.has_value()) {
            throw Error(ErrorCode::InconsistentPlanState,
                        "subtask " + std::to_string(active->ordinal) +
                            " is active but no outcome was reported");
        }
        if (*last_outcome) {
            active->status = SubtaskStatus::Done;
        } else if (active->attempts - 1 < retry_limit) {
            ++active->attempts;
            PlannerDirective d;
            d.kind = PlannerDirective::Kind::Retry;
            d.ordinal = active->ordinal;
            d.attempt = active->attempts - 1;
            return d;
        } else {
            active->status = SubtaskStatus::Failed;
            PlannerDirective d;
            d.kind = PlannerDirective::Kind::Abort;
            d.ordinal = active->ordinal;
            d.reason = "subtask " + std::to_string(active->ordinal) + " failed after " +
                       std::to_string(active->attempts) + " attempts";
            return d;
        }
    } else if (last_outcome.has_value()) {
        throw Error(ErrorCode::InconsistentPlanState,
                    "outcome reported but no subtask is active");
    }

    for (const Subtask& sub : plan.subtasks) {
        if (sub.status == SubtaskStatus::Failed) {
            PlannerDirective d;
            d.kind = PlannerDirective::Kind::Abort;
            d.ordinal = sub.ordinal;
            d.reason = "subtask " + std::to_string(sub.ordinal) + " already failed";
            return d;
        }
    }
    for (Subtask& sub : plan.subtasks) {
        if (sub.status == SubtaskStatus::Pending) {
            sub.status = SubtaskStatus::Active;
            sub.attempts = 1;
            PlannerDirective d;
            d.kind = PlannerDirective::Kind::Execute;
            d.ordinal = sub.ordinal;
            return d;
        }
    }
    PlannerDirective d;
    d.kind = PlannerDirective::Kind::Complete;
    return d;
}

std::optional<int> query_next_step(const PlannerBackend& backend, const TaskPlan& plan,
                                   const std::string& original_prompt) {
    std::string status_prompt = original_prompt;
    status_prompt += "\nProgress:\n";
    for (const Subtask& sub : plan.subtasks) {
        status_prompt += std::to_string(sub.ordinal) + ". " + sub.text + " [" +
                         to_string(sub.status) + "]\n";
    }
    status_prompt += "Reply with 'NEXT: <number>' naming the subtask to run next.\n";
    std::optional<std::string> reply = backend.next_step(status_prompt);
    if (!reply.has_value()) return std::nullopt;
    return parse_next_hint(*reply);
}

void to_json(nlohmann::json& j, const SkillSignature& signature) {
    j = nlohmann::json{{"verb", signature.verb},
                       {"object", signature.object_slot},
                       {"modifiers", signature.modifiers}};
    if (signature.target_slot.has_value()) {
        j["target"] = *signature.target_slot;
    } else {
        j["target"] = nullptr;
    }
}

void from_json(const nlohmann::json& j, SkillSignature& signature) {
    signature.verb = j.at("verb").get<std::string>();
    signature.object_slot = j.at("object").get<std::string>();
    signature.modifiers = j.at("modifiers").get<std::vector<std::string>>();
    if (j.contains("target") && !j["target"].is_null()) {
        signature.target_slot = j["target"].get<std::string>();
    } else {
        signature.target_slot.reset();
    }
}

void to_json(nlohmann::json& j, const TaskPlan& plan) {
    nlohmann::json subtasks = nlohmann::json::array();
    for (const Subtask& sub : plan.subtasks) {
        subtasks.push_back(nlohmann::json{{"ordinal", sub.ordinal},
                                          {"text", sub.text},
                                          {"signature", sub.signature},
                                          {"status", to_string(sub.status)},
                                          {"attempts", sub.attempts}});
    }
    j = nlohmann::json{{"task_id", plan.task.task_id},
                       {"instruction", plan.task.text},
                       {"scene_id", plan.scene_id},
                       {"subtasks", std::move(subtasks)},
                       {"provenance",
                        {{"backend_id", plan.provenance.backend_id},
                         {"prompt_hash", plan.provenance.prompt_hash}}}};
}

void from_json(const nlohmann::json& j, TaskPlan& plan) {
    plan.task.task_id = j.at("task_id").get<std::string>();
    plan.task.text = j.at("instruction").get<std::string>();
    plan.scene_id = j.at("scene_id").get<std::string>();
    plan.subtasks.clear();
    for (const nlohmann::json& entry : j.at("subtasks")) {
        Subtask sub;
        sub.ordinal = entry.at("ordinal").get<int>();
        sub.text = entry.at("text").get<std::string>();
        sub.signature = entry.at("signature").get<SkillSignature>();
        sub.status = subtask_status_from_string(entry.at("status").get<std::string>());
        sub.attempts = entry.at("attempts").get<int>();
        plan.subtasks.push_back(std::move(sub));
    }
    plan.provenance.backend_id = j.at("provenance").at("backend_id").get<std::string>();
    plan.provenance.prompt_hash = j.at("provenance").at("prompt_hash").get<std::string>();
    validate_plan(plan);
}

}  // namespace skillforge
