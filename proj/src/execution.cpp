#include "skillforge/execution.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "skillforge/error.hpp"
#include "skillforge/hash.hpp"
#include "skillforge/rng.hpp"

namespace skillforge {

const char* to_string(Dist dist) { return dist == Dist::ID ? "ID" : "OOD"; }

Dist dist_from_string(const std::string& name) {
    if (name == "ID") return Dist::ID;
    if (name == "OOD") return Dist::OOD;
    throw Error(ErrorCode::InvalidInput, "distribution tag must be ID or OOD, got: " + name);
}

std::string condition_label(const Condition& condition) {
    std::string label;
    for (const auto& [slot, dist] : condition) {
        if (!label.empty()) label += ' ';
        label += slot;
        label += '=';
        label += to_string(dist);
    }
    return label;
}

Condition condition_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidInput, "condition must be an object of slot tags");
    }
    Condition condition;
    for (const auto& item : j.items()) {
        condition[item.key()] = dist_from_string(item.value().get<std::string>());
    }
    return condition;
}

nlohmann::json condition_to_json(const Condition& condition) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [slot, dist] : condition) j[slot] = to_string(dist);
    return j;
}

double ExecutorProfile::probability_for(const Condition& condition) const {
    for (const ConditionRule& rule : conditions) {
        if (rule.tags == condition) return rule.p;
    }
    if (default_p.has_value()) return *default_p;
    throw Error(ErrorCode::UnknownCondition,
                "profile " + profile_id + " has no entry for condition '" +
                    condition_label(condition) + "' and no default");
}

ExecutorProfile load_executor_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read executor profile: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput,
                    "bad executor profile " + path.string() + ": " + e.what());
    }
    ExecutorProfile profile;
    try {
        profile.profile_id = doc.at("profile_id").get<std::string>();
        if (doc.contains("default_p") && !doc["default_p"].is_null()) {
            profile.default_p = doc["default_p"].get<double>();
        }
        if (doc.contains("latency_ticks") && !doc["latency_ticks"].is_null()) {
            profile.latency_ticks = doc["latency_ticks"].get<int>();
        }
        for (const nlohmann::json& entry : doc.value("conditions", nlohmann::json::array())) {
            ConditionRule rule;
            rule.tags = condition_from_json(entry.at("tags"));
            rule.p = entry.at("p").get<double>();
            profile.conditions.push_back(std::move(rule));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput,
                    "bad executor profile " + path.string() + ": " + e.what());
    }
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (profile.default_p.has_value() && !in_unit(*profile.default_p)) {
        throw Error(ErrorCode::InvalidInput,
                    "default_p outside [0,1] in profile " + profile.profile_id);
    }
    for (const ConditionRule& rule : profile.conditions) {
        if (!in_unit(rule.p)) {
            throw Error(ErrorCode::InvalidInput,
                        "probability outside [0,1] in profile " + profile.profile_id);
        }
    }
    if (profile.profile_id.empty()) {
        throw Error(ErrorCode::InvalidInput, "profile_id must be non-empty: " + path.string());
    }
    return profile;
}

ProfileRegistry ProfileRegistry::load_dir(const std::filesystem::path& profiles_dir) {
    if (!std::filesystem::is_directory(profiles_dir)) {
        throw Error(ErrorCode::IoError,
                    "executor profile directory not found: " + profiles_dir.string());
    }
    ProfileRegistry registry;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(profiles_dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const std::filesystem::path& file : files) {
        registry.add(load_executor_profile(file));
    }
    return registry;
}

void ProfileRegistry::add(ExecutorProfile profile) {
    std::string id = profile.profile_id;
    if (profiles_.count(id) != 0) {
        throw Error(ErrorCode::InvalidInput, "duplicate executor profile id: " + id);
    }
    profiles_.emplace(std::move(id), std::move(profile));
}

const ExecutorProfile* ProfileRegistry::find(const std::string& profile_id) const {
    auto it = profiles_.find(profile_id);
    return it == profiles_.end() ? nullptr : &it->second;
}

const ExecutorProfile& ProfileRegistry::require(const std::string& profile_id) const {
    const ExecutorProfile* profile = find(profile_id);
    if (profile == nullptr) {
        throw Error(ErrorCode::SkillNotTrained, "no executor profile loaded for " + profile_id);
    }
    return *profile;
}

namespace {

std::uint64_t stable_hash64(const std::string& text) {
    // first 8 bytes of the SHA-256 digest; stable across platforms and runs
    std::string hex = sha256_hex(text);
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

bool execute_skill(const SkillRecord& record, const ExecutorProfile& profile,
                   const ExecutionContext& ctx, int ordinal, int attempt) {
    if (record.status != SkillStatus::Trained) {
        throw Error(ErrorCode::SkillNotTrained,
                    record.definition.skill_id + " is " + to_string(record.status) +
                        ", not trained");
    }
    double p = profile.probability_for(ctx.condition);
    std::uint64_t stream_seed =
        ctx.rng_seed ^ stable_hash64(profile.profile_id + '\n' + condition_label(ctx.condition));
    double draw = uniform_draw(stream_seed, static_cast<std::uint64_t>(ctx.trial_index),
                               static_cast<std::uint64_t>(ordinal),
                               static_cast<std::uint64_t>(attempt));
    return draw < p;
}

std::vector<ResolvedStage> resolve_stages(const TaskPlan& plan, const SkillLibrary& lib,
                                          const ProfileRegistry& profiles,
                                          const AbstractionBackend& backend,
                                          const Lexicon& lexicon) {
    GapReport report = lib.gap_report(plan, backend, lexicon);
    if (!report.missing.empty()) {
        std::set<std::string> ids;
        for (const GapProposal& gap : report.missing) ids.insert(gap.proposal.skill_id);
        std::string listed;
        for (const std::string& id : ids) {
            if (!listed.empty()) listed += ", ";
            listed += id;
        }
        throw Error(ErrorCode::SkillGap,
                    "library does not cover task " + plan.task.task_id +
                        "; missing skills: " + listed);
    }

    std::map<int, std::string> matched(report.matched.begin(), report.matched.end());
    std::vector<ResolvedStage> stages;
    for (const Subtask& sub : plan.subtasks) {
        ResolvedStage stage;
        stage.ordinal = sub.ordinal;
        stage.record = lib.find(matched.at(sub.ordinal));
        if (stage.record->status != SkillStatus::Trained) {
            throw Error(ErrorCode::SkillNotTrained,
                        stage.record->definition.skill_id + " is " +
                            to_string(stage.record->status) + ", not trained");
        }
        stage.profile = &profiles.require(*stage.record->executor_binding);
        stages.push_back(stage);
    }
    return stages;
}

TrialOutcome run_resolved(TaskPlan plan, const std::vector<ResolvedStage>& stages,
                          const ExecutionContext& ctx, const RunOptions& options) {
    if (stages.size() != plan.subtasks.size()) {
        throw Error(ErrorCode::InconsistentPlanState,
                    "resolved stage list does not match the plan");
    }
    for (Subtask& sub : plan.subtasks) {
        sub.status = SubtaskStatus::Pending;
        sub.attempts = 0;
    }

    TrialOutcome outcome;
    outcome.task_id = plan.task.task_id;
    std::optional<bool> last;
    std::optional<std::pair<int, bool>> unresolved;  // stage mid-retry

    for (;;) {
        PlannerDirective directive = next_directive(plan, last, options.retry_limit);
        outcome.directive_trace.push_back(directive);

        if (directive.kind == PlannerDirective::Kind::Complete) {
            break;
        }
        if (directive.kind == PlannerDirective::Kind::Abort) {
            if (unresolved.has_value()) {
                StageResult result;
                result.ordinal = unresolved->first;
                result.skill_id =
                    stages[static_cast<size_t>(unresolved->first) - 1].record->definition.skill_id;
                result.success = unresolved->second;
                outcome.per_stage.push_back(result);
            }
            break;
        }

        int ordinal = directive.ordinal;
        const Subtask& sub = plan.subtasks[static_cast<size_t>(ordinal) - 1];
        const ResolvedStage& stage = stages[static_cast<size_t>(ordinal) - 1];

        if (directive.kind == PlannerDirective::Kind::Execute && options.replan_each_step &&
            options.planner != nullptr) {
            std::optional<int> hint = query_next_step(*options.planner, plan,
                                                      options.original_prompt);
            if (hint.has_value() && *hint != ordinal) {
                throw Error(ErrorCode::InconsistentPlanState,
                            "re-planner chose subtask " + std::to_string(*hint) +
                                " but the directive machine chose " + std::to_string(ordinal));
            }
        }

        bool success =
            execute_skill(*stage.record, *stage.profile, ctx, ordinal, sub.attempts - 1);
        last = success;
        unresolved = std::make_pair(ordinal, success);
        if (success) {
            StageResult result;
            result.ordinal = ordinal;
            result.skill_id = stage.record->definition.skill_id;
            result.success = true;
            outcome.per_stage.push_back(result);
            unresolved.reset();
        }
    }

    outcome.overall_success =
        outcome.per_stage.size() == plan.subtasks.size() &&
        std::all_of(outcome.per_stage.begin(), outcome.per_stage.end(),
                    [](const StageResult& r) { return r.success; });
    return outcome;
}

TrialOutcome run_task(const TaskPlan& plan, const SkillLibrary& lib,
                      const ProfileRegistry& profiles, const AbstractionBackend& backend,
                      const Lexicon& lexicon, const ExecutionContext& ctx,
                      const RunOptions& options) {
    std::vector<ResolvedStage> stages = resolve_stages(plan, lib, profiles, backend, lexicon);
    return run_resolved(plan, stages, ctx, options);
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read task spec: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad task spec " + path.string() + ": " + e.what());
    }
    TaskSpec spec;
    try {
        spec.task_id = doc.at("task_id").get<std::string>();
        for (const nlohmann::json& entry : doc.at("slots")) {
            TaskSlot slot;
            slot.name = entry.at("name").get<std::string>();
            slot.position_count = entry.at("position_count").get<int>();
            spec.slots.push_back(std::move(slot));
        }
        spec.demos_per_setting = doc.at("demos_per_setting").get<int>();
        for (const nlohmann::json& entry : doc.at("skill_split")) {
            SkillSplitEntry split;
            split.skill_id = entry.at("skill_id").get<std::string>();
            split.demos = entry.at("demos").get<int>();
            spec.skill_split.push_back(std::move(split));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad task spec " + path.string() + ": " + e.what());
    }
    if (spec.demos_per_setting <= 0) {
        throw Error(ErrorCode::InvalidInput, "demos_per_setting must be positive");
    }
    for (const TaskSlot& slot : spec.slots) {
        if (slot.position_count <= 0) {
            throw Error(ErrorCode::InvalidInput,
                        "position_count must be positive for slot " + slot.name);
        }
    }
    for (const SkillSplitEntry& split : spec.skill_split) {
        if (split.demos <= 0) {
            throw Error(ErrorCode::InvalidInput,
                        "skill_split demos must be positive for " + split.skill_id);
        }
    }
    return spec;
}

const char* to_string(Strategy strategy) {
    return strategy == Strategy::EndToEnd ? "end-to-end" : "skill-based";
}

long long data_cost(const TaskSpec& spec, Strategy strategy) {
    if (strategy == Strategy::EndToEnd) {
        long long settings = 1;
        for (const TaskSlot& slot : spec.slots) settings *= slot.position_count;
        return settings * spec.demos_per_setting;
    }
    long long total = 0;
    for (const SkillSplitEntry& split : spec.skill_split) total += split.demos;
    return total;
}

void to_json(nlohmann::json& j, const TrialOutcome& outcome) {
    nlohmann::json stages = nlohmann::json::array();
    for (const StageResult& stage : outcome.per_stage) {
        stages.push_back(nlohmann::json{{"ordinal", stage.ordinal},
                                        {"skill_id", stage.skill_id},
                                        {"success", stage.success}});
    }
    nlohmann::json trace = nlohmann::json::array();
    for (const PlannerDirective& directive : outcome.directive_trace) {
        trace.push_back(to_string(directive));
    }
    j = nlohmann::json{{"task_id", outcome.task_id},
                       {"per_stage", std::move(stages)},
                       {"overall_success", outcome.overall_success},
                       {"directive_trace", std::move(trace)}};
}

}  // namespace skillforge
