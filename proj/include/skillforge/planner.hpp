#pragma once

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/abstraction.hpp"
#include "skillforge/http_client.hpp"
#include "skillforge/scene.hpp"

namespace skillforge {

struct TaskInstruction {
    std::string task_id;
    std::string text;

    bool operator==(const TaskInstruction&) const = default;
};

enum class SubtaskStatus { Pending, Active, Done, Failed };

const char* to_string(SubtaskStatus status);
SubtaskStatus subtask_status_from_string(const std::string& name);

struct Subtask {
    int ordinal = 0;  // 1-based, contiguous
    std::string text;
    SkillSignature signature;
    SubtaskStatus status = SubtaskStatus::Pending;
    int attempts = 0;  // executions started, including retries

    bool operator==(const Subtask&) const = default;
};

struct PlanProvenance {
    std::string backend_id;
    std::string prompt_hash;

    bool operator==(const PlanProvenance&) const = default;
};

struct TaskPlan {
    TaskInstruction task;
    std::string scene_id;
    std::vector<Subtask> subtasks;
    PlanProvenance provenance;

    bool operator==(const TaskPlan&) const = default;
};

/// Throws InconsistentPlanState unless ordinals are contiguous from 1 and at
/// most one subtask is Active.
void validate_plan(const TaskPlan& plan);

struct PlannerDirective {
    enum class Kind { Execute, Retry, Abort, Complete };
    Kind kind = Kind::Complete;
    int ordinal = 0;   // Execute / Retry
    int attempt = 0;   // Retry: 1-based retry count
    std::string reason;  // Abort

    bool operator==(const PlannerDirective&) const = default;
};

std::string to_string(const PlannerDirective& directive);

/// Prompt template with {description}, {relations}, {objects} and
/// {instruction} placeholders; all four must be present.
class PromptTemplate {
public:
    static PromptTemplate load(const std::filesystem::path& path);
    static PromptTemplate from_string(std::string text);

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

/// Deterministic template instantiation. Relations render one triple per
/// line ("banana LeftOf plate"); an empty relation list renders the
/// "none observed" sentinel.
std::string build_prompt(const TaskInstruction& task, const SceneGraph& scene,
                         const PromptTemplate& prompt_template);

/// Parses the planner response grammar: a "PLAN:" line followed by numbered
/// "N. <phrase>" lines. Throws MalformedPlannerResponse on anything else.
std::vector<std::string> parse_plan_response(const std::string& raw);

/// Optional trailing "NEXT: N" hint, when present and well-formed.
std::optional<int> parse_next_hint(const std::string& raw);

class PlannerBackend {
public:
    virtual ~PlannerBackend() = default;
    virtual std::string backend_id() const = 0;
    virtual std::string complete(const std::string& prompt) const = 0;
    /// Per-step re-query used when replan_each_step is enabled; backends
    /// without the capability return nullopt.
    virtual std::optional<std::string> next_step(const std::string& status_prompt) const {
        (void)status_prompt;
        return std::nullopt;
    }
};

/// Pattern -> plan rule table (the fixture planner). Patterns are
/// case-insensitive regexes; plan lines may reference capture groups as $1,
/// $2, ... Unmatched instructions fall back to clause splitting with pronoun
/// resolution.
class MockRulePlanner : public PlannerBackend {
public:
    static MockRulePlanner load(const std::filesystem::path& rules_path, const Lexicon& lexicon);

    std::string backend_id() const override { return "mock-rule-table"; }
    std::string complete(const std::string& prompt) const override;
    std::optional<std::string> next_step(const std::string& status_prompt) const override;

private:
    struct Rule {
        std::string pattern;
        std::vector<std::string> plan_lines;
    };
    std::vector<Rule> rules_;
    const Lexicon* lexicon_ = nullptr;
};

/// Generic chat-completion endpoint: POST {"prompt": ...}, reply
/// {"text": "<response in the plan grammar>"}.
class HttpLlmPlanner : public PlannerBackend {
public:
    explicit HttpLlmPlanner(BackendConfig config);

    std::string backend_id() const override { return "http-llm"; }
    std::string complete(const std::string& prompt) const override;
    std::optional<std::string> next_step(const std::string& status_prompt) const override;

private:
    BackendConfig config_;
};

struct DecomposeOptions {
    int malformed_retry_limit = 3;
};

/// The decomposition wheel: prompt the backend once, parse the plan, and
/// canonicalize every phrase into a signature. Never consults the skill
/// library.
TaskPlan decompose(const TaskInstruction& task, const SceneGraph& scene,
                   const PlannerBackend& backend, const AbstractionBackend& canonicalizer,
                   const PromptTemplate& prompt_template, const DecomposeOptions& options = {});

/// Pure directive state machine. Marks plan statuses as a side effect:
/// Execute activates the chosen subtask, a success outcome completes it, an
/// exhausted retry budget fails it.
PlannerDirective next_directive(TaskPlan& plan, std::optional<bool> last_outcome, int retry_limit);

/// One optional per-step confirmation round. Returns the backend's chosen
/// ordinal, or nullopt when the backend does not re-plan.
std::optional<int> query_next_step(const PlannerBackend& backend, const TaskPlan& plan,
                                   const std::string& original_prompt);

void to_json(nlohmann::json& j, const SkillSignature& signature);
void from_json(const nlohmann::json& j, SkillSignature& signature);
void to_json(nlohmann::json& j, const TaskPlan& plan);
void from_json(const nlohmann::json& j, TaskPlan& plan);

}  // namespace skillforge
