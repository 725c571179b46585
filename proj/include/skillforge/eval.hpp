#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "skillforge/execution.hpp"

namespace skillforge {

struct BatchSpec {
    std::string task_id;
    std::string method;  // row label, e.g. "Octo" or "Ours"
    Condition condition;
    int trials = 1;
    std::uint64_t seed = 0;

    bool operator==(const BatchSpec&) const = default;
};

struct BatchResult {
    BatchSpec spec;
    std::vector<std::string> stage_labels;
    std::vector<double> stage_rates;  // percent over all trials; unreached = failure
    int overall_successes = 0;
};

/// Human stage label from a subtask signature: the display verb, capitalized.
std::string stage_label(const SkillSignature& signature, const Lexicon& lexicon);

/// Runs spec.trials independent episodes. Stage k's denominator is always
/// the full trial count, so rates are non-increasing across stages. Trials
/// partition across `threads` without changing any outcome.
BatchResult run_batch(const BatchSpec& spec, const TaskPlan& plan, const SkillLibrary& lib,
                      const ProfileRegistry& profiles, const AbstractionBackend& backend,
                      const Lexicon& lexicon, const RunOptions& options = {}, int threads = 1);

/// Method rows by first appearance, condition columns in canonical order
/// (all-ID first, single OOD slots in slot order, then increasing OOD
/// count), one percentage list per cell.
struct SuccessTable {
    std::string task_id;
    std::vector<std::string> stage_labels;
    std::vector<std::string> methods;
    std::vector<Condition> conditions;
    std::map<std::string, std::map<std::string, std::vector<double>>> cells;  // method -> condition label
};

/// Canonical column comparison; exposed for tests.
bool condition_order_less(const Condition& a, const Condition& b);

SuccessTable build_success_table(const std::vector<BatchResult>& results);

std::string render_markdown(const SuccessTable& table);
/// Long-format CSV: task_id,method,condition,stage_index,stage_label,rate_percent.
std::string render_csv(const SuccessTable& table);
std::string render_csv(const SuccessTable& table, const std::string& method);

struct StrategyTaskCost {
    std::string task_id;
    long long end_to_end = 0;
    long long skill_based = 0;
};

struct NewTaskGap {
    std::string task_id;
    std::vector<std::string> missing_skill_ids;  // sorted, deduplicated
};

struct StrategyReport {
    std::vector<StrategyTaskCost> per_task;
    long long total_end_to_end = 0;
    long long total_skill_based = 0;
    std::vector<NewTaskGap> new_task_gaps;
};

/// Data-cost table plus per-new-task gap counts; all arithmetic delegates
/// to data_cost and gap_report.
StrategyReport compare_strategies(const std::vector<TaskSpec>& specs,
                                  const std::vector<TaskPlan>& new_tasks,
                                  const SkillLibrary& lib, const AbstractionBackend& backend,
                                  const Lexicon& lexicon);

std::string render_markdown(const StrategyReport& report);
void to_json(nlohmann::json& j, const StrategyReport& report);

/// One executor profile per stage, aligned with plan subtask order.
struct MethodSpec {
    std::string label;
    std::vector<std::string> stage_bindings;
};

struct EvalSuite {
    std::string suite_id;
    std::string task_id;
    std::string scene_id;
    std::string instruction;
    int trials = 1;
    std::uint64_t seed = 0;
    int retry_limit = 0;
    std::vector<MethodSpec> methods;
    std::vector<Condition> conditions;
};

EvalSuite load_eval_suite(const std::filesystem::path& path);

struct EvalEnvironment {
    const Lexicon* lexicon = nullptr;
    const PlannerBackend* planner = nullptr;
    const AbstractionBackend* abstraction = nullptr;
    const PromptTemplate* prompt_template = nullptr;
    const ProfileRegistry* profiles = nullptr;
    std::filesystem::path fixtures_dir;
    Granularity granularity = Granularity::Medium;
    int threads = 1;
};

/// Plans the suite task once, synthesizes a trained library per method
/// (skills bound stage-by-stage), runs every method x condition batch, and
/// writes out/<task>/<method>.csv plus out/report.md.
SuccessTable run_eval_suite(const EvalSuite& suite, const EvalEnvironment& env,
                            const std::filesystem::path& out_dir);

}  // namespace skillforge
