#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/library.hpp"
#include "skillforge/planner.hpp"

namespace skillforge {

enum class Dist { ID, OOD };

const char* to_string(Dist dist);
Dist dist_from_string(const std::string& name);

/// Per-slot placement tags, keyed by slot name (alphabetical iteration
/// order is the canonical slot order everywhere).
using Condition = std::map<std::string, Dist>;

/// "banana=ID plate=OOD"; also the condition component of the RNG stream key.
std::string condition_label(const Condition& condition);
Condition condition_from_json(const nlohmann::json& j);
nlohmann::json condition_to_json(const Condition& condition);

struct ConditionRule {
    Condition tags;
    double p = 0.0;

    bool operator==(const ConditionRule&) const = default;
};

/// Stochastic stand-in for a fine-tuned policy: success probability per
/// evaluation condition. Rules match on exact tag equality.
struct ExecutorProfile {
    std::string profile_id;
    std::optional<double> default_p;
    std::vector<ConditionRule> conditions;
    std::optional<int> latency_ticks;

    /// Throws UnknownCondition when no rule matches and no default is set.
    double probability_for(const Condition& condition) const;
};

ExecutorProfile load_executor_profile(const std::filesystem::path& path);

class ProfileRegistry {
public:
    /// Loads every *.json under the directory, keyed by profile_id.
    static ProfileRegistry load_dir(const std::filesystem::path& profiles_dir);

    void add(ExecutorProfile profile);
    const ExecutorProfile* find(const std::string& profile_id) const;
    const ExecutorProfile& require(const std::string& profile_id) const;

private:
    std::map<std::string, ExecutorProfile> profiles_;
};

struct ExecutionContext {
    Condition condition;
    std::uint64_t rng_seed = 0;
    std::int64_t trial_index = 0;
};

/// One Bernoulli draw from the counter-based stream. The outcome is a pure
/// function of (profile, condition, seed, trial, ordinal, attempt); retries
/// land on fresh attempt indices so they are independent draws.
bool execute_skill(const SkillRecord& record, const ExecutorProfile& profile,
                   const ExecutionContext& ctx, int ordinal, int attempt);

struct StageResult {
    int ordinal = 0;
    std::string skill_id;
    bool success = false;

    bool operator==(const StageResult&) const = default;
};

struct TrialOutcome {
    std::string task_id;
    std::vector<StageResult> per_stage;  // resolved stages only; none after an abort
    bool overall_success = false;
    std::vector<PlannerDirective> directive_trace;
};

struct RunOptions {
    int retry_limit = 0;
    /// Optional per-step confirmation against a re-planning backend; a
    /// disagreeing hint is an InconsistentPlanState error.
    bool replan_each_step = false;
    const PlannerBackend* planner = nullptr;
    std::string original_prompt;
};

/// Stage bindings resolved once per plan: each subtask's matched record and
/// bound executor profile.
struct ResolvedStage {
    int ordinal = 0;
    const SkillRecord* record = nullptr;
    const ExecutorProfile* profile = nullptr;
};

/// Throws SkillGap (with every missing skill_id listed) unless the plan is
/// fully covered, then SkillNotTrained unless every matched record is
/// Trained with a loadable profile.
std::vector<ResolvedStage> resolve_stages(const TaskPlan& plan, const SkillLibrary& lib,
                                          const ProfileRegistry& profiles,
                                          const AbstractionBackend& backend,
                                          const Lexicon& lexicon);

/// One simulated trial over pre-resolved stages. Statuses in `plan` are
/// reset to Pending before the directive loop starts.
TrialOutcome run_resolved(TaskPlan plan, const std::vector<ResolvedStage>& stages,
                          const ExecutionContext& ctx, const RunOptions& options = {});

/// Gap check + resolve + one trial: the inference-time pipeline for a
/// single episode.
TrialOutcome run_task(const TaskPlan& plan, const SkillLibrary& lib,
                      const ProfileRegistry& profiles, const AbstractionBackend& backend,
                      const Lexicon& lexicon, const ExecutionContext& ctx,
                      const RunOptions& options = {});

struct TaskSlot {
    std::string name;
    int position_count = 0;

    bool operator==(const TaskSlot&) const = default;
};

struct SkillSplitEntry {
    std::string skill_id;
    int demos = 0;

    bool operator==(const SkillSplitEntry&) const = default;
};

/// Demo-collection shape of one task: slot position grids for the
/// end-to-end strategy, per-skill demo counts for the skill-based one.
struct TaskSpec {
    std::string task_id;
    std::vector<TaskSlot> slots;
    int demos_per_setting = 0;
    std::vector<SkillSplitEntry> skill_split;
};

TaskSpec load_task_spec(const std::filesystem::path& path);

enum class Strategy { EndToEnd, SkillBased };

const char* to_string(Strategy strategy);

/// EndToEnd multiplies slot position counts by demos-per-setting; SkillBased
/// adds per-skill demo counts. The data-explosion contrast in one function.
long long data_cost(const TaskSpec& spec, Strategy strategy);

void to_json(nlohmann::json& j, const TrialOutcome& outcome);

}  // namespace skillforge
