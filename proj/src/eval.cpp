#include "skillforge/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "skillforge/error.hpp"
#include "skillforge/scene_io.hpp"

namespace skillforge {

std::string stage_label(const SkillSignature& signature, const Lexicon& lexicon) {
    std::string label = signature.verb;
    if (lexicon.is_canonical_verb(signature.verb)) {
        label = lexicon.verb_entry(signature.verb).display;
    }
    if (!label.empty()) {
        label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    }
    return label;
}

namespace {

/// Deterministic fixed-point rendering: integral rates print bare,
/// fractional ones keep a single decimal.
std::string format_rate(double rate) {
    double rounded = std::round(rate);
    if (std::fabs(rate - rounded) < 1e-9) {
        return std::to_string(static_cast<long long>(rounded));
    }
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(1);
    out << rate;
    return out.str();
}

}  // namespace

BatchResult run_batch(const BatchSpec& spec, const TaskPlan& plan, const SkillLibrary& lib,
                      const ProfileRegistry& profiles, const AbstractionBackend& backend,
                      const Lexicon& lexicon, const RunOptions& options, int threads) {
    if (spec.trials < 1) {
        throw Error(ErrorCode::InvalidInput, "batch needs at least one trial");
    }
    std::vector<ResolvedStage> stages = resolve_stages(plan, lib, profiles, backend, lexicon);

    size_t stage_count = plan.subtasks.size();
    std::vector<long long> stage_hits(stage_count, 0);
    long long overall_hits = 0;

    auto run_range = [&](std::int64_t begin, std::int64_t end, std::vector<long long>& hits,
                         long long& overall) {
        for (std::int64_t trial = begin; trial < end; ++trial) {
            ExecutionContext ctx;
            ctx.condition = spec.condition;
            ctx.rng_seed = spec.seed;
            ctx.trial_index = trial;
            TrialOutcome outcome = run_resolved(plan, stages, ctx, options);
            for (const StageResult& stage : outcome.per_stage) {
                if (stage.success) ++hits[static_cast<size_t>(stage.ordinal) - 1];
            }
            if (outcome.overall_success) ++overall;
        }
    };

    int workers = std::max(1, threads);
    if (workers == 1 || spec.trials < workers * 2) {
        run_range(0, spec.trials, stage_hits, overall_hits);
    } else {
        std::vector<std::vector<long long>> worker_hits(
            static_cast<size_t>(workers), std::vector<long long>(stage_count, 0));
        std::vector<long long> worker_overall(static_cast<size_t>(workers), 0);
        std::vector<std::thread> pool;
        std::int64_t chunk = (spec.trials + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            std::int64_t begin = w * chunk;
            std::int64_t end = std::min<std::int64_t>(spec.trials, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, w, begin, end] {
                run_range(begin, end, worker_hits[static_cast<size_t>(w)],
                          worker_overall[static_cast<size_t>(w)]);
            });
        }
        for (std::thread& t : pool) t.join();
        for (int w = 0; w < workers; ++w) {
            for (size_t k = 0; k < stage_count; ++k) {
                stage_hits[k] += worker_hits[static_cast<size_t>(w)][k];
            }
            overall_hits += worker_overall[static_cast<size_t>(w)];
        }
    }

    BatchResult result;
    result.spec = spec;
    for (const Subtask& sub : plan.subtasks) {
        result.stage_labels.push_back(stage_label(sub.signature, lexicon));
    }
    for (size_t k = 0; k < stage_count; ++k) {
        result.stage_rates.push_back(100.0 * static_cast<double>(stage_hits[k]) /
                                     static_cast<double>(spec.trials));
    }
    result.overall_successes = static_cast<int>(overall_hits);
    return result;
}

bool condition_order_less(const Condition& a, const Condition& b) {
    std::vector<std::string> slots_a, slots_b;
    for (const auto& [slot, dist] : a) slots_a.push_back(slot);
    for (const auto& [slot, dist] : b) slots_b.push_back(slot);
    if (slots_a != slots_b) return slots_a < slots_b;
    auto ood_count = [](const Condition& c) {
        return std::count_if(c.begin(), c.end(),
                             [](const auto& kv) { return kv.second == Dist::OOD; });
    };
    auto na = ood_count(a);
    auto nb = ood_count(b);
    if (na != nb) return na < nb;
    // same OOD count: the condition whose earlier slot goes OOD comes first
    for (auto ita = a.begin(), itb = b.begin(); ita != a.end(); ++ita, ++itb) {
        if (ita->second != itb->second) return ita->second == Dist::OOD;
    }
    return false;
}

SuccessTable build_success_table(const std::vector<BatchResult>& results) {
    if (results.empty()) {
        throw Error(ErrorCode::InvalidInput, "no batch results to tabulate");
    }
    SuccessTable table;
    table.task_id = results.front().spec.task_id;
    table.stage_labels = results.front().stage_labels;

    for (const BatchResult& result : results) {
        if (result.spec.task_id != table.task_id) {
            throw Error(ErrorCode::InvalidInput,
                        "mixed task ids in one table: " + result.spec.task_id + " vs " +
                            table.task_id);
        }
        if (result.stage_labels.size() != table.stage_labels.size()) {
            throw Error(ErrorCode::InconsistentStageCount,
                        "stage counts differ across batches for task " + table.task_id);
        }
        for (double rate : result.stage_rates) {
            if (rate < 0.0 || rate > 100.0) {
                throw Error(ErrorCode::InvalidInput, "rate outside [0,100]");
            }
        }
        if (std::find(table.methods.begin(), table.methods.end(), result.spec.method) ==
            table.methods.end()) {
            table.methods.push_back(result.spec.method);
        }
        if (std::find(table.conditions.begin(), table.conditions.end(), result.spec.condition) ==
            table.conditions.end()) {
            table.conditions.push_back(result.spec.condition);
        }
        table.cells[result.spec.method][condition_label(result.spec.condition)] =
            result.stage_rates;
    }
    std::sort(table.conditions.begin(), table.conditions.end(), condition_order_less);
    return table;
}

std::string render_markdown(const SuccessTable& table) {
    std::string stages;
    for (size_t k = 0; k < table.stage_labels.size(); ++k) {
        if (k > 0) stages += " | ";
        stages += table.stage_labels[k];
    }
    std::string out = "## " + table.task_id + "\n\n";
    out += "Cell format: per-stage success rate in % (" + stages + ").\n\n";
    out += "| Method |";
    for (const Condition& condition : table.conditions) {
        out += ' ' + condition_label(condition) + " |";
    }
    out += "\n|---|";
    for (size_t i = 0; i < table.conditions.size(); ++i) out += "---|";
    out += '\n';
    for (const std::string& method : table.methods) {
        out += "| " + method + " |";
        auto method_it = table.cells.find(method);
        for (const Condition& condition : table.conditions) {
            const std::vector<double>* rates = nullptr;
            if (method_it != table.cells.end()) {
                auto cell_it = method_it->second.find(condition_label(condition));
                if (cell_it != method_it->second.end()) rates = &cell_it->second;
            }
            out += ' ';
            if (rates == nullptr) {
                out += "-";
            } else {
                for (size_t k = 0; k < rates->size(); ++k) {
                    if (k > 0) out += ' ';
                    out += format_rate((*rates)[k]);
                }
            }
            out += " |";
        }
        out += '\n';
    }
    return out;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_csv_rows(std::string& out, const SuccessTable& table, const std::string& method) {
    auto method_it = table.cells.find(method);
    if (method_it == table.cells.end()) return;
    for (const Condition& condition : table.conditions) {
        auto cell_it = method_it->second.find(condition_label(condition));
        if (cell_it == method_it->second.end()) continue;
        for (size_t k = 0; k < cell_it->second.size(); ++k) {
            out += csv_escape(table.task_id) + ',' + csv_escape(method) + ',' +
                   csv_escape(condition_label(condition)) + ',' + std::to_string(k + 1) + ',' +
                   csv_escape(table.stage_labels[k]) + ',' + format_rate(cell_it->second[k]) +
                   '\n';
        }
    }
}

constexpr const char* kCsvHeader =
    "task_id,method,condition,stage_index,stage_label,rate_percent\n";

}  // namespace

std::string render_csv(const SuccessTable& table) {
    std::string out = kCsvHeader;
    for (const std::string& method : table.methods) append_csv_rows(out, table, method);
    return out;
}

std::string render_csv(const SuccessTable& table, const std::string& method) {
    std::string out = kCsvHeader;
    append_csv_rows(out, table, method);
    return out;
}

StrategyReport compare_strategies(const std::vector<TaskSpec>& specs,
                                  const std::vector<TaskPlan>& new_tasks,
                                  const SkillLibrary& lib, const AbstractionBackend& backend,
                                  const Lexicon& lexicon) {
    StrategyReport report;
    for (const TaskSpec& spec : specs) {
        StrategyTaskCost cost;
        cost.task_id = spec.task_id;
        cost.end_to_end = data_cost(spec, Strategy::EndToEnd);
        cost.skill_based = data_cost(spec, Strategy::SkillBased);
        report.total_end_to_end += cost.end_to_end;
        report.total_skill_based += cost.skill_based;
        report.per_task.push_back(std::move(cost));
    }
    for (const TaskPlan& plan : new_tasks) {
        GapReport gaps = lib.gap_report(plan, backend, lexicon);
        NewTaskGap gap;
        gap.task_id = plan.task.task_id;
        std::set<std::string> ids;
        for (const GapProposal& proposal : gaps.missing) ids.insert(proposal.proposal.skill_id);
        gap.missing_skill_ids.assign(ids.begin(), ids.end());
        report.new_task_gaps.push_back(std::move(gap));
    }
    return report;
}

std::string render_markdown(const StrategyReport& report) {
    std::string out = "## Demo-collection cost by strategy\n\n";
    out += "| Task | End-to-end demos | Skill-based demos |\n|---|---|---|\n";
    for (const StrategyTaskCost& cost : report.per_task) {
        out += "| " + cost.task_id + " | " + std::to_string(cost.end_to_end) + " | " +
               std::to_string(cost.skill_based) + " |\n";
    }
    out += "| **Total** | " + std::to_string(report.total_end_to_end) + " | " +
           std::to_string(report.total_skill_based) + " |\n";
    if (!report.new_task_gaps.empty()) {
        out += "\n## New-task coverage\n\n";
        out += "| Task | Missing skills | Skill ids |\n|---|---|---|\n";
        for (const NewTaskGap& gap : report.new_task_gaps) {
            std::string ids;
            for (const std::string& id : gap.missing_skill_ids) {
                if (!ids.empty()) ids += ", ";
                ids += id;
            }
            if (ids.empty()) ids = "-";
            out += "| " + gap.task_id + " | " + std::to_string(gap.missing_skill_ids.size()) +
                   " | " + ids + " |\n";
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const StrategyReport& report) {
    nlohmann::json per_task = nlohmann::json::array();
    for (const StrategyTaskCost& cost : report.per_task) {
        per_task.push_back(nlohmann::json{{"task_id", cost.task_id},
                                          {"end_to_end", cost.end_to_end},
                                          {"skill_based", cost.skill_based}});
    }
    nlohmann::json gaps = nlohmann::json::array();
    for (const NewTaskGap& gap : report.new_task_gaps) {
        gaps.push_back(nlohmann::json{{"task_id", gap.task_id},
                                      {"missing_count", gap.missing_skill_ids.size()},
                                      {"missing_skill_ids", gap.missing_skill_ids}});
    }
    j = nlohmann::json{{"per_task", std::move(per_task)},
                       {"total_end_to_end", report.total_end_to_end},
                       {"total_skill_based", report.total_skill_based},
                       {"new_task_gaps", std::move(gaps)}};
}

EvalSuite load_eval_suite(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read eval suite: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad eval suite " + path.string() + ": " + e.what());
    }
    EvalSuite suite;
    try {
        suite.suite_id = doc.at("suite_id").get<std::string>();
        suite.task_id = doc.at("task_id").get<std::string>();
        suite.scene_id = doc.at("scene_id").get<std::string>();
        suite.instruction = doc.at("instruction").get<std::string>();
        suite.trials = doc.at("trials").get<int>();
        suite.seed = doc.at("seed").get<std::uint64_t>();
        suite.retry_limit = doc.value("retry_limit", 0);
        for (const nlohmann::json& entry : doc.at("methods")) {
            MethodSpec method;
            method.label = entry.at("label").get<std::string>();
            method.stage_bindings = entry.at("stage_bindings").get<std::vector<std::string>>();
            suite.methods.push_back(std::move(method));
        }
        for (const nlohmann::json& entry : doc.at("conditions")) {
            suite.conditions.push_back(condition_from_json(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad eval suite " + path.string() + ": " + e.what());
    }
    if (suite.trials < 1) {
        throw Error(ErrorCode::InvalidInput, "eval suite needs trials >= 1");
    }
    if (suite.methods.empty() || suite.conditions.empty()) {
        throw Error(ErrorCode::InvalidInput, "eval suite needs methods and conditions");
    }
    return suite;
}

namespace {

/// Library with every plan skill registered and trained against the
/// method's per-stage executor bindings.
SkillLibrary library_for_method(const TaskPlan& plan, const MethodSpec& method,
                                const EvalEnvironment& env) {
    if (method.stage_bindings.size() != plan.subtasks.size()) {
        throw Error(ErrorCode::InvalidInput,
                    "method " + method.label + " binds " +
                        std::to_string(method.stage_bindings.size()) + " stages but the plan has " +
                        std::to_string(plan.subtasks.size()));
    }
    SkillLibrary lib = SkillLibrary::create(env.granularity);
    DataManifest manifest = lib.update_cycle(plan, DemoPolicy{}, *env.abstraction, *env.lexicon);
    GapReport coverage = lib.gap_report(plan, *env.abstraction, *env.lexicon);
    std::map<std::string, std::string> binding_for_skill;
    for (const auto& [ordinal, skill_id] : coverage.matched) {
        binding_for_skill.emplace(skill_id,
                                  method.stage_bindings[static_cast<size_t>(ordinal) - 1]);
    }
    for (const ManifestEntry& entry : manifest.entries) {
        lib.record_training(entry.skill_id, entry.demos_required,
                            binding_for_skill.at(entry.skill_id));
    }
    return lib;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorCode::IoError,
                    "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path.string());
    }
}

}  // namespace

SuccessTable run_eval_suite(const EvalSuite& suite, const EvalEnvironment& env,
                            const std::filesystem::path& out_dir) {
    SceneFixture fixture =
        load_scene_fixture(scene_fixture_path(env.fixtures_dir, suite.scene_id));
    SceneGraph scene;
    scene.scene_id = fixture.scene_id;
    scene.description = fixture.description;
    scene.objects = fixture.objects;
    scene.relations = infer_relations(scene.objects, RelationRuleConfig{});

    TaskInstruction task;
    task.task_id = suite.task_id;
    task.text = suite.instruction;
    TaskPlan plan = decompose(task, scene, *env.planner, *env.abstraction, *env.prompt_template);

    RunOptions options;
    options.retry_limit = suite.retry_limit;

    std::vector<BatchResult> results;
    for (const MethodSpec& method : suite.methods) {
        SkillLibrary lib = library_for_method(plan, method, env);
        for (const Condition& condition : suite.conditions) {
            BatchSpec spec;
            spec.task_id = suite.task_id;
            spec.method = method.label;
            spec.condition = condition;
            spec.trials = suite.trials;
            spec.seed = suite.seed;
            results.push_back(run_batch(spec, plan, lib, *env.profiles, *env.abstraction,
                                        *env.lexicon, options, env.threads));
        }
    }

    SuccessTable table = build_success_table(results);
    for (const std::string& method : table.methods) {
        write_text_file(out_dir / table.task_id / (method + ".csv"), render_csv(table, method));
    }
    std::string report = "# Evaluation report: " + suite.suite_id + "\n\n";
    report += "Trials per cell: " + std::to_string(suite.trials) +
              ", seed: " + std::to_string(suite.seed) +
              ", retry limit: " + std::to_string(suite.retry_limit) + "\n\n";
    report += render_markdown(table);
    write_text_file(out_dir / "report.md", report);
    return table;
}

}  // namespace skillforge
