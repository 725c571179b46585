#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/config.hpp"
#include "skillforge/error.hpp"
#include "skillforge/eval.hpp"
#include "skillforge/execution.hpp"
#include "skillforge/library.hpp"
#include "skillforge/perception.hpp"
#include "skillforge/planner.hpp"
#include "skillforge/scene_io.hpp"

namespace sf = skillforge;

namespace {

sf::BackendConfig perception_config(const sf::GlobalConfig& config) {
    sf::BackendConfig backend;
    backend.backend_kind = config.perception_backend == "http" ? sf::BackendKind::Http
                                                               : sf::BackendKind::Fixture;
    backend.endpoint_url = config.perception_endpoint;
    backend.api_key_env = config.api_key_env;
    backend.timeout_seconds = config.http_timeout_seconds;
    backend.max_retries = config.http_max_retries;
    return backend;
}

std::unique_ptr<sf::PlannerBackend> make_planner(const sf::GlobalConfig& config,
                                                 const sf::Lexicon& lexicon) {
    if (config.planner_backend == "http") {
        sf::BackendConfig backend;
        backend.backend_kind = sf::BackendKind::Http;
        backend.endpoint_url = config.planner_endpoint;
        backend.api_key_env = config.api_key_env;
        backend.timeout_seconds = config.http_timeout_seconds;
        backend.max_retries = config.http_max_retries;
        return std::make_unique<sf::HttpLlmPlanner>(backend);
    }
    return std::make_unique<sf::MockRulePlanner>(
        sf::MockRulePlanner::load(config.planner_rules_path, lexicon));
}

sf::SceneGraph acquire_scene(const sf::GlobalConfig& config, const std::string& scene_id,
                             const std::string& instruction, const sf::Lexicon& lexicon) {
    std::unique_ptr<sf::PerceptionBackend> backend =
        sf::make_perception_backend(perception_config(config), config.fixtures_dir);
    sf::PerceptionRequest request;
    request.scene_id = scene_id;
    request.label_hints = sf::extract_label_hints(instruction, lexicon);
    return sf::build_scene_graph(*backend, request);
}

sf::TaskPlan make_plan(const sf::GlobalConfig& config, const sf::Lexicon& lexicon,
                       const std::string& task_id, const std::string& instruction,
                       const sf::SceneGraph& scene) {
    std::unique_ptr<sf::PlannerBackend> planner = make_planner(config, lexicon);
    sf::LexiconCanonicalizer canonicalizer(lexicon);
    sf::PromptTemplate prompt_template =
        sf::PromptTemplate::load(config.templates_dir / "vlp_prompt.txt");
    sf::TaskInstruction task;
    task.task_id = task_id;
    task.text = instruction;
    return sf::decompose(task, scene, *planner, canonicalizer, prompt_template);
}

sf::Condition parse_condition(const std::vector<std::string>& entries) {
    sf::Condition condition;
    for (const std::string& entry : entries) {
        size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw sf::Error(sf::ErrorCode::InvalidInput,
                            "condition entries look like slot=ID or slot=OOD, got: " + entry);
        }
        condition[entry.substr(0, eq)] = sf::dist_from_string(entry.substr(eq + 1));
    }
    return condition;
}

nlohmann::json library_to_json(const sf::SkillLibrary& lib) {
    nlohmann::json records = nlohmann::json::object();
    for (const auto& [id, record] : lib.records()) {
        nlohmann::json r{{"definition", record.definition},
                         {"status", sf::to_string(record.status)},
                         {"demo_count", record.demo_count},
                         {"version", record.version}};
        if (record.executor_binding.has_value()) {
            r["executor_binding"] = *record.executor_binding;
        } else {
            r["executor_binding"] = nullptr;
        }
        records[id] = std::move(r);
    }
    nlohmann::json log = nlohmann::json::array();
    for (const sf::UpdateLogEvent& event : lib.update_log()) {
        log.push_back(nlohmann::json{{"timestamp", event.timestamp},
                                     {"kind", event.kind},
                                     {"skill_id", event.skill_id},
                                     {"detail", event.detail}});
    }
    return nlohmann::json{{"granularity", sf::to_string(lib.granularity())},
                          {"library_version", lib.library_version()},
                          {"records", std::move(records)},
                          {"update_log", std::move(log)}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skillforge: three-wheeled atomic-skill orchestration"};
    app.require_subcommand(1);
    app.fallthrough();  // global options are accepted after the subcommand too

    std::string config_path;
    auto* o_config = app.add_option("--config", config_path, "key=value config file");
    std::string fixtures_dir;
    auto* o_fixtures = app.add_option("--fixtures-dir", fixtures_dir, "scene fixture root");
    std::string library_path;
    auto* o_library = app.add_option("--library", library_path, "skill library file");
    std::string templates_dir;
    auto* o_templates = app.add_option("--templates-dir", templates_dir, "prompt templates");
    std::string profiles_dir;
    auto* o_profiles = app.add_option("--profiles-dir", profiles_dir, "executor profiles");
    std::string lexicon_path;
    auto* o_lexicon = app.add_option("--lexicon", lexicon_path, "verb lexicon file");
    std::string rules_path;
    auto* o_rules = app.add_option("--planner-rules", rules_path, "mock planner rule table");
    std::string granularity_name;
    auto* o_granularity =
        app.add_option("--granularity", granularity_name, "coarse | medium | fine");
    std::uint64_t seed = 0;
    auto* o_seed = app.add_option("--seed", seed, "RNG stream seed");
    std::string planner_backend;
    auto* o_planner = app.add_option("--planner-backend", planner_backend, "mock | http");
    std::string perception_backend;
    auto* o_perception =
        app.add_option("--perception-backend", perception_backend, "fixture | http");
    bool replan_each_step = false;
    auto* o_replan =
        app.add_flag("--replan-each-step", replan_each_step, "confirm each step with the planner");
    int retry_limit = 0;
    auto* o_retry = app.add_option("--retry-limit", retry_limit, "per-stage retry budget");
    std::string planner_endpoint;
    auto* o_planner_url = app.add_option("--planner-endpoint", planner_endpoint, "http planner URL");
    std::string perception_endpoint;
    auto* o_perception_url =
        app.add_option("--perception-endpoint", perception_endpoint, "http perception URL");
    std::string api_key_env;
    auto* o_api_key_env =
        app.add_option("--api-key-env", api_key_env, "env var holding the API key");
    double http_timeout = 5.0;
    auto* o_timeout = app.add_option("--http-timeout", http_timeout, "seconds per attempt");
    int http_retries = 2;
    auto* o_http_retries = app.add_option("--http-max-retries", http_retries, "HTTP retries");
    bool ci_mode = false;
    auto* o_ci = app.add_flag("--ci", ci_mode, "CI mode: --seed becomes mandatory for run/eval");

    // plan
    auto* cmd_plan = app.add_subcommand("plan", "decompose an instruction against a scene");
    std::string plan_task_text, plan_scene, plan_task_id = "task";
    cmd_plan->add_option("--task", plan_task_text, "natural-language instruction")->required();
    cmd_plan->add_option("--scene", plan_scene, "scene id")->required();
    cmd_plan->add_option("--task-id", plan_task_id, "identifier for the plan");

    // library init | inspect | update
    auto* cmd_library = app.add_subcommand("library", "manage the skill library file");
    cmd_library->require_subcommand(1);
    auto* cmd_lib_init = cmd_library->add_subcommand("init", "create an empty library");
    bool lib_force = false;
    cmd_lib_init->add_flag("--force", lib_force, "overwrite an existing file");
    auto* cmd_lib_inspect = cmd_library->add_subcommand("inspect", "print records and log");
    auto* cmd_lib_update =
        cmd_library->add_subcommand("update", "register missing skills for a task");
    std::string upd_task_text, upd_scene, upd_task_id = "task";
    cmd_lib_update->add_option("--task", upd_task_text, "natural-language instruction")
        ->required();
    cmd_lib_update->add_option("--scene", upd_scene, "scene id")->required();
    cmd_lib_update->add_option("--task-id", upd_task_id, "identifier for the plan");

    // run
    auto* cmd_run = app.add_subcommand("run", "simulate task execution trials");
    std::string run_task_text, run_scene, run_task_id = "task", run_profile;
    int run_trials = 1;
    bool record_training = false;
    std::vector<std::string> run_condition;
    cmd_run->add_option("--task", run_task_text, "natural-language instruction")->required();
    cmd_run->add_option("--scene", run_scene, "scene id")->required();
    cmd_run->add_option("--task-id", run_task_id, "identifier for the plan");
    cmd_run->add_option("--trials", run_trials, "episode count");
    cmd_run->add_option("--profile", run_profile, "executor profile for --record-training");
    cmd_run->add_flag("--record-training", record_training,
                      "fulfill the data manifest before running");
    cmd_run->add_option("--condition", run_condition, "slot=ID|OOD placement tags");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "run an evaluation suite");
    std::string suite_path, out_dir = "out";
    int jobs = 1;
    cmd_eval->add_option("--suite", suite_path, "suite file")->required();
    cmd_eval->add_option("--out", out_dir, "output directory");
    cmd_eval->add_option("--jobs", jobs, "trial-level parallelism");

    // cost
    auto* cmd_cost = app.add_subcommand("cost", "compare demo-collection strategies");
    std::vector<std::string> spec_paths;
    std::string cost_library;
    std::vector<std::string> new_tasks, new_scenes, new_task_ids;
    bool cost_markdown = false;
    cmd_cost->add_option("--spec", spec_paths, "task spec files")->required();
    cmd_cost->add_option("--library", cost_library, "library for coverage checks");
    cmd_cost->add_option("--new-task", new_tasks, "new task instruction");
    cmd_cost->add_option("--new-scene", new_scenes, "scene id for the matching --new-task");
    cmd_cost->add_option("--new-task-id", new_task_ids, "identifier for the matching --new-task");
    cmd_cost->add_flag("--markdown", cost_markdown, "print Markdown instead of JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        sf::GlobalConfig config;
        std::filesystem::path file_to_load;
        if (o_config->count() > 0) {
            file_to_load = config_path;
        } else if (const char* env_config = std::getenv("SKILLFORGE_CONFIG")) {
            file_to_load = env_config;
        } else if (std::filesystem::exists("skillforge.toml")) {
            file_to_load = "skillforge.toml";
        }
        if (!file_to_load.empty()) sf::apply_config_file(config, file_to_load);
        sf::apply_environment(config);

        if (o_fixtures->count() > 0) config.fixtures_dir = fixtures_dir;
        if (o_library->count() > 0) config.library_path = library_path;
        if (o_templates->count() > 0) config.templates_dir = templates_dir;
        if (o_profiles->count() > 0) config.profiles_dir = profiles_dir;
        if (o_lexicon->count() > 0) config.lexicon_path = lexicon_path;
        if (o_rules->count() > 0) config.planner_rules_path = rules_path;
        if (o_granularity->count() > 0) {
            config.granularity = sf::granularity_from_string(granularity_name);
        }
        if (o_seed->count() > 0) {
            config.seed = seed;
            config.seed_set = true;
        }
        if (o_planner->count() > 0) sf::apply_config_key(config, "planner_backend", planner_backend);
        if (o_perception->count() > 0) {
            sf::apply_config_key(config, "perception_backend", perception_backend);
        }
        if (o_replan->count() > 0) config.replan_each_step = replan_each_step;
        if (o_retry->count() > 0) {
            if (retry_limit < 0) {
                throw sf::Error(sf::ErrorCode::InvalidInput, "retry limit must be non-negative");
            }
            config.retry_limit = retry_limit;
        }
        if (o_planner_url->count() > 0) config.planner_endpoint = planner_endpoint;
        if (o_perception_url->count() > 0) config.perception_endpoint = perception_endpoint;
        if (o_api_key_env->count() > 0) config.api_key_env = api_key_env;
        if (o_timeout->count() > 0) config.http_timeout_seconds = http_timeout;
        if (o_http_retries->count() > 0) config.http_max_retries = http_retries;
        if (o_ci->count() > 0) config.ci_mode = ci_mode;

        bool seed_flag_given = o_seed->count() > 0;
        if (config.ci_mode && (cmd_run->parsed() || cmd_eval->parsed()) && !seed_flag_given) {
            throw sf::Error(sf::ErrorCode::InvalidInput,
                            "--seed is mandatory for run/eval in CI mode");
        }

        if (app.got_subcommand(cmd_plan)) {
            sf::Lexicon lexicon = sf::Lexicon::load(config.lexicon_path);
            sf::SceneGraph scene = acquire_scene(config, plan_scene, plan_task_text, lexicon);
            sf::TaskPlan plan = make_plan(config, lexicon, plan_task_id, plan_task_text, scene);
            std::cout << nlohmann::json(plan).dump(2) << '\n';
            return 0;
        }

        if (app.got_subcommand(cmd_library)) {
            if (cmd_library->got_subcommand(cmd_lib_init)) {
                if (std::filesystem::exists(config.library_path) && !lib_force) {
                    throw sf::Error(sf::ErrorCode::InvalidInput,
                                    config.library_path.string() +
                                        " already exists; pass --force to overwrite");
                }
                sf::SkillLibrary lib = sf::SkillLibrary::create(config.granularity);
                lib.save(config.library_path);
                std::cout << nlohmann::json{{"library_path", config.library_path.string()},
                                            {"granularity", sf::to_string(lib.granularity())},
                                            {"library_version", lib.library_version()}}
                                 .dump(2)
                          << '\n';
                return 0;
            }
            if (cmd_library->got_subcommand(cmd_lib_inspect)) {
                sf::SkillLibrary lib = sf::SkillLibrary::load(config.library_path);
                std::cout << library_to_json(lib).dump(2) << '\n';
                return 0;
            }
            // update
            sf::SkillLibrary lib = sf::SkillLibrary::load(config.library_path);
            sf::Lexicon lexicon = sf::Lexicon::load(config.lexicon_path);
            if (lib.granularity() != config.granularity && o_granularity->count() > 0) {
                throw sf::Error(sf::ErrorCode::InvalidInput,
                                "library granularity is frozen at creation; cannot override");
            }
            sf::SceneGraph scene = acquire_scene(config, upd_scene, upd_task_text, lexicon);
            sf::TaskPlan plan = make_plan(config, lexicon, upd_task_id, upd_task_text, scene);
            sf::LexiconCanonicalizer canonicalizer(lexicon);
            sf::DataManifest manifest =
                lib.update_cycle(plan, sf::DemoPolicy{}, canonicalizer, lexicon);
            lib.save(config.library_path);
            std::cout << nlohmann::json{{"task_id", plan.task.task_id},
                                        {"new_skills", manifest.entries.size()},
                                        {"manifest", manifest},
                                        {"library_version", lib.library_version()}}
                             .dump(2)
                      << '\n';
            std::cerr << "registered " << manifest.entries.size() << " new skill(s)\n";
            return 0;
        }

        if (app.got_subcommand(cmd_run)) {
            sf::Lexicon lexicon = sf::Lexicon::load(config.lexicon_path);
            sf::SkillLibrary lib = sf::SkillLibrary::load(config.library_path);
            sf::SceneGraph scene = acquire_scene(config, run_scene, run_task_text, lexicon);
            sf::TaskPlan plan = make_plan(config, lexicon, run_task_id, run_task_text, scene);
            sf::LexiconCanonicalizer canonicalizer(lexicon);

            if (record_training) {
                if (run_profile.empty()) {
                    throw sf::Error(sf::ErrorCode::InvalidInput,
                                    "--record-training requires --profile");
                }
                const sf::DemoPolicy policy;
                lib.update_cycle(plan, policy, canonicalizer, lexicon);
                // Fulfill manifest entries from this invocation and any still
                // pending from earlier `library update` runs.
                int trained = 0;
                for (const auto& [ordinal, skill_id] :
                     lib.gap_report(plan, canonicalizer, lexicon).matched) {
                    const sf::SkillRecord* record = lib.find(skill_id);
                    if (record && record->status != sf::SkillStatus::Trained) {
                        lib.record_training(skill_id, policy.demos_per_skill, run_profile);
                        ++trained;
                    }
                }
                lib.save(config.library_path);
                std::cerr << "trained " << trained << " skill(s)\n";
            }

            sf::ProfileRegistry profiles = sf::ProfileRegistry::load_dir(config.profiles_dir);
            sf::RunOptions options;
            options.retry_limit = config.retry_limit;
            std::unique_ptr<sf::PlannerBackend> planner;
            std::string prompt;
            if (config.replan_each_step) {
                planner = make_planner(config, lexicon);
                sf::PromptTemplate prompt_template =
                    sf::PromptTemplate::load(config.templates_dir / "vlp_prompt.txt");
                prompt = sf::build_prompt(plan.task, scene, prompt_template);
                options.replan_each_step = true;
                options.planner = planner.get();
                options.original_prompt = prompt;
            }
            sf::Condition condition = parse_condition(run_condition);

            if (run_trials < 1) {
                throw sf::Error(sf::ErrorCode::InvalidInput, "--trials must be at least 1");
            }
            if (run_trials == 1) {
                sf::ExecutionContext ctx;
                ctx.condition = condition;
                ctx.rng_seed = config.seed;
                ctx.trial_index = 0;
                sf::TrialOutcome outcome =
                    sf::run_task(plan, lib, profiles, canonicalizer, lexicon, ctx, options);
                std::cout << nlohmann::json(outcome).dump(2) << '\n';
                return 0;
            }
            sf::BatchSpec spec;
            spec.task_id = plan.task.task_id;
            spec.method = "run";
            spec.condition = condition;
            spec.trials = run_trials;
            spec.seed = config.seed;
            sf::BatchResult result =
                sf::run_batch(spec, plan, lib, profiles, canonicalizer, lexicon, options);
            std::cout << nlohmann::json{{"task_id", result.spec.task_id},
                                        {"trials", result.spec.trials},
                                        {"condition", sf::condition_to_json(condition)},
                                        {"stage_labels", result.stage_labels},
                                        {"stage_rates_percent", result.stage_rates},
                                        {"overall_successes", result.overall_successes}}
                             .dump(2)
                      << '\n';
            return 0;
        }

        if (app.got_subcommand(cmd_eval)) {
            sf::Lexicon lexicon = sf::Lexicon::load(config.lexicon_path);
            sf::EvalSuite suite = sf::load_eval_suite(suite_path);
            if (seed_flag_given) suite.seed = config.seed;
            std::unique_ptr<sf::PlannerBackend> planner = make_planner(config, lexicon);
            sf::LexiconCanonicalizer canonicalizer(lexicon);
            sf::PromptTemplate prompt_template =
                sf::PromptTemplate::load(config.templates_dir / "vlp_prompt.txt");
            sf::ProfileRegistry profiles = sf::ProfileRegistry::load_dir(config.profiles_dir);
            if (jobs < 1) {
                throw sf::Error(sf::ErrorCode::InvalidInput, "--jobs must be at least 1");
            }
            sf::EvalEnvironment env;
            env.lexicon = &lexicon;
            env.planner = planner.get();
            env.abstraction = &canonicalizer;
            env.prompt_template = &prompt_template;
            env.profiles = &profiles;
            env.fixtures_dir = config.fixtures_dir;
            env.granularity = config.granularity;
            env.threads = jobs;
            sf::SuccessTable table = sf::run_eval_suite(suite, env, out_dir);
            std::cout << sf::render_csv(table);
            std::cerr << "wrote " << (std::filesystem::path(out_dir) / "report.md").string()
                      << '\n';
            return 0;
        }

        if (app.got_subcommand(cmd_cost)) {
            sf::Lexicon lexicon = sf::Lexicon::load(config.lexicon_path);
            std::vector<sf::TaskSpec> specs;
            for (const std::string& path : spec_paths) {
                specs.push_back(sf::load_task_spec(path));
            }
            if (new_scenes.size() != new_tasks.size()) {
                throw sf::Error(sf::ErrorCode::InvalidInput,
                                "each --new-task needs a matching --new-scene");
            }
            if (!new_task_ids.empty() && new_task_ids.size() != new_tasks.size()) {
                throw sf::Error(sf::ErrorCode::InvalidInput,
                                "--new-task-id count must match --new-task");
            }
            sf::SkillLibrary lib = cost_library.empty()
                                       ? sf::SkillLibrary::create(config.granularity)
                                       : sf::SkillLibrary::load(cost_library);
            std::vector<sf::TaskPlan> plans;
            for (size_t i = 0; i < new_tasks.size(); ++i) {
                std::string task_id =
                    new_task_ids.empty() ? "new-task-" + std::to_string(i + 1) : new_task_ids[i];
                sf::SceneGraph scene = acquire_scene(config, new_scenes[i], new_tasks[i], lexicon);
                plans.push_back(make_plan(config, lexicon, task_id, new_tasks[i], scene));
            }
            sf::LexiconCanonicalizer canonicalizer(lexicon);
            sf::StrategyReport report =
                sf::compare_strategies(specs, plans, lib, canonicalizer, lexicon);
            if (cost_markdown) {
                std::cout << sf::render_markdown(report);
            } else {
                std::cout << nlohmann::json(report).dump(2) << '\n';
            }
            return 0;
        }
    } catch (const sf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
