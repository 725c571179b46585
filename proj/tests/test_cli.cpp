#include "doctest.h"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "support/paths.hpp"
#include "support/proc.hpp"

namespace ts = skillforge::testsupport;
using nlohmann::json;

namespace {

std::string q(const std::string& s) { return ts::shell_quote(s); }

/// Runs the CLI from the repo root so the default relative data paths
/// (fixtures, templates, lexicon, profiles) resolve.
ts::ProcResult cli(const std::string& args, const std::string& redirect = "2>/dev/null") {
    return ts::run_command("cd " + q(ts::repo_dir().string()) + " && " + q(ts::cli_path()) +
                           " " + args + " " + redirect);
}

/// Same, with an environment prefix such as "SKILLFORGE_SEED=7".
ts::ProcResult cli_env(const std::string& env_prefix, const std::string& args) {
    return ts::run_command("cd " + q(ts::repo_dir().string()) + " && " + env_prefix + " " +
                           q(ts::cli_path()) + " " + args + " 2>/dev/null");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

const std::string kBananaTask = "'Pick up the banana and place it onto the plate'";
const std::string kPourTask = "'Pour the water from the bottle into the mug'";

}  // namespace

TEST_CASE("plan prints a canonical decomposition as JSON") {
    const ts::ProcResult result =
        cli("plan --task " + kBananaTask + " --scene banana_plate_1 --task-id banana-1");
    REQUIRE(result.exit_code == 0);
    const json plan = json::parse(result.output);
    CHECK(plan["task_id"] == "banana-1");
    CHECK(plan["instruction"] == "Pick up the banana and place it onto the plate");
    CHECK(plan["scene_id"] == "banana_plate_1");
    REQUIRE(plan["subtasks"].size() == 2);
    CHECK(plan["subtasks"][0]["ordinal"] == 1);
    CHECK(plan["subtasks"][0]["text"] == "Pick up the banana");
    CHECK(plan["subtasks"][0]["signature"]["verb"] == "pick-up");
    CHECK(plan["subtasks"][0]["signature"]["object"] == "banana");
    CHECK(plan["subtasks"][0]["signature"]["target"].is_null());
    CHECK(plan["subtasks"][0]["status"] == "pending");
    CHECK(plan["subtasks"][1]["text"] == "Place the banana onto the plate");
    CHECK(plan["subtasks"][1]["signature"]["target"] == "plate");
    CHECK(plan["provenance"]["backend_id"] == "mock-rule-table");
    CHECK(plan["provenance"]["prompt_hash"].get<std::string>().size() == 64);
}

TEST_CASE("library lifecycle: init, update, inspect") {
    ts::TempDir dir;
    const std::string lib = "--library " + q(dir.file("lib.json"));

    const ts::ProcResult init = cli(lib + " library init");
    REQUIRE(init.exit_code == 0);
    CHECK(json::parse(init.output)["library_version"] == 1);
    CHECK(json::parse(init.output)["granularity"] == "medium");

    // A second init refuses to clobber unless forced.
    CHECK(cli(lib + " library init").exit_code == 29);
    CHECK(cli(lib + " library init --force").exit_code == 0);

    const ts::ProcResult update = cli(lib + " library update --task " + kPourTask +
                                      " --scene bottle_mug_1 --task-id pour-1");
    REQUIRE(update.exit_code == 0);
    const json report = json::parse(update.output);
    CHECK(report["task_id"] == "pour-1");
    CHECK(report["new_skills"] == 2);
    CHECK(report["library_version"] == 3);
    REQUIRE(report["manifest"]["entries"].size() == 2);
    CHECK(report["manifest"]["entries"][0]["skill_id"] == "medium/lift.bottle");
    CHECK(report["manifest"]["entries"][0]["demos_required"] == 9);
    CHECK(report["manifest"]["entries"][0]["position_grid"].size() == 9);
    CHECK(report["manifest"]["entries"][1]["skill_id"] == "medium/tilt.bottle.mug");

    // Covered plans register nothing more.
    const ts::ProcResult again = cli(lib + " library update --task " + kPourTask +
                                     " --scene bottle_mug_1 --task-id pour-2");
    REQUIRE(again.exit_code == 0);
    CHECK(json::parse(again.output)["new_skills"] == 0);
    CHECK(json::parse(again.output)["library_version"] == 4);

    const ts::ProcResult inspect = cli(lib + " library inspect");
    REQUIRE(inspect.exit_code == 0);
    const json state = json::parse(inspect.output);
    CHECK(state["records"]["medium/lift.bottle"]["status"] == "defined");
    CHECK(state["records"]["medium/tilt.bottle.mug"]["demo_count"] == 0);
    CHECK(state["update_log"].back()["kind"] == "update-cycle");
}

TEST_CASE("run records training, executes, and persists the library") {
    ts::TempDir dir;
    const std::string lib = "--library " + q(dir.file("lib.json"));
    REQUIRE(cli(lib + " library init").exit_code == 0);

    const std::string run_args =
        " run --task " + kBananaTask + " --scene banana_plate_1 --seed 7";
    const ts::ProcResult trained = cli(lib + run_args + " --record-training --profile sim-perfect");
    REQUIRE(trained.exit_code == 0);
    const json outcome = json::parse(trained.output);
    CHECK(outcome["overall_success"] == true);
    CHECK(outcome["directive_trace"] ==
          json::array({"execute 1", "execute 2", "complete"}));
    CHECK(outcome["per_stage"].size() == 2);

    // Training went to stderr and into the saved library.
    const ts::ProcResult notes = ts::run_command(
        "cd " + q(ts::repo_dir().string()) + " && " + q(ts::cli_path()) + " " + lib + run_args +
        " --record-training --profile sim-perfect 2>&1 >/dev/null");
    CHECK(notes.output.find("trained 0 skill(s)") != std::string::npos);

    const json state = json::parse(cli(lib + " library inspect").output);
    CHECK(state["records"]["medium/pick-up.banana"]["status"] == "trained");
    CHECK(state["records"]["medium/pick-up.banana"]["executor_binding"] == "sim-perfect");

    const ts::ProcResult batch = cli(lib + run_args + " --trials 50");
    REQUIRE(batch.exit_code == 0);
    const json rates = json::parse(batch.output);
    CHECK(rates["trials"] == 50);
    CHECK(rates["overall_successes"] == 50);
    CHECK(rates["stage_rates_percent"] == json::array({100.0, 100.0}));
    CHECK(rates["stage_labels"] == json::array({"Pick up", "Place"}));
}

TEST_CASE("run surfaces library gaps and training state as exit codes") {
    ts::TempDir dir;
    const std::string lib = "--library " + q(dir.file("lib.json"));
    REQUIRE(cli(lib + " library init").exit_code == 0);
    const std::string run_args =
        " run --task " + kBananaTask + " --scene banana_plate_1 --seed 1";

    // Empty library: the plan has uncovered skills.
    CHECK(cli(lib + run_args).exit_code == 27);

    // Registered but untrained skills are a different failure.
    REQUIRE(cli(lib + " library update --task " + kBananaTask + " --scene banana_plate_1")
                .exit_code == 0);
    CHECK(cli(lib + run_args).exit_code == 25);
}

TEST_CASE("cost compares strategies and audits new-task coverage") {
    const std::string specs = "--spec tasks/pick_place_banana.json"
                              " --spec tasks/pick_place_pen.json --spec tasks/pour_water.json";
    const ts::ProcResult result = cli("cost " + specs);
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.output);
    CHECK(report["total_end_to_end"] == 78);
    CHECK(report["total_skill_based"] == 51);
    REQUIRE(report["per_task"].size() == 3);
    CHECK(report["per_task"][0]["end_to_end"] == 24);
    CHECK(report["per_task"][0]["skill_based"] == 15);

    const ts::ProcResult markdown = cli("cost " + specs + " --markdown");
    REQUIRE(markdown.exit_code == 0);
    CHECK(markdown.output.find("| **Total** | 78 | 51 |") != std::string::npos);

    const ts::ProcResult gaps =
        cli("cost " + specs + " --new-task 'Give the guest a cup of water'"
            " --new-scene guest_cup_1 --new-task-id guest");
    REQUIRE(gaps.exit_code == 0);
    const json audited = json::parse(gaps.output);
    REQUIRE(audited["new_task_gaps"].size() == 1);
    CHECK(audited["new_task_gaps"][0]["task_id"] == "guest");
    CHECK(audited["new_task_gaps"][0]["missing_count"] == 3);

    CHECK(cli("cost " + specs + " --new-task 'wave'").exit_code == 29);
}

TEST_CASE("failures map to their exit codes") {
    ts::TempDir dir;
    // Unknown scene fixture.
    CHECK(cli("plan --task 'wave the flag' --scene no_such_scene").exit_code == 12);
    // Blank instruction.
    CHECK(cli("plan --task '   ' --scene banana_plate_1").exit_code == 17);
    // Library file absent.
    CHECK(cli("--library " + q(dir.file("ghost.json")) + " library inspect").exit_code == 22);
    // Library file damaged.
    write_file(dir.file("corrupt.json"), "{\"schema_version\": 1, \"checksu");
    CHECK(cli("--library " + q(dir.file("corrupt.json")) + " library inspect").exit_code == 24);
    // Config file with an unknown key.
    write_file(dir.file("bad.cfg"), "retry_limit=2\nwarp_speed=9\n");
    CHECK(cli("--config " + q(dir.file("bad.cfg")) + " plan --task 'x' --scene banana_plate_1")
              .exit_code == 29);
    // Missing required option is a usage error from the argument parser.
    CHECK(cli("plan --scene banana_plate_1").exit_code == 106);
}

TEST_CASE("configuration resolves flag over environment over file") {
    ts::TempDir dir;
    const std::vector<std::pair<std::string, std::string>> libraries = {
        {"a.json", "coarse"}, {"b.json", "medium"}, {"c.json", "fine"}};
    for (const auto& [name, granularity] : libraries) {
        REQUIRE(cli("--library " + q(dir.file(name)) + " --granularity " + granularity +
                    " library init")
                    .exit_code == 0);
    }
    write_file(dir.file("skillforge.cfg"),
               "# comment lines and blanks are ignored\n\nlibrary_path=" + dir.file("a.json") +
                   "\n");
    const std::string cfg = "--config " + q(dir.file("skillforge.cfg"));

    auto granularity_of = [](const ts::ProcResult& result) {
        REQUIRE(result.exit_code == 0);
        return json::parse(result.output)["granularity"].get<std::string>();
    };

    CHECK(granularity_of(cli(cfg + " library inspect")) == "coarse");
    CHECK(granularity_of(cli_env("SKILLFORGE_LIBRARY_PATH=" + q(dir.file("b.json")),
                                 cfg + " library inspect")) == "medium");
    CHECK(granularity_of(cli_env("SKILLFORGE_LIBRARY_PATH=" + q(dir.file("b.json")),
                                 cfg + " --library " + q(dir.file("c.json")) +
                                     " library inspect")) == "fine");
    // The config file itself can come from the environment.
    CHECK(granularity_of(cli_env("SKILLFORGE_CONFIG=" + q(dir.file("skillforge.cfg")),
                                 "library inspect")) == "coarse");
}

TEST_CASE("CI mode requires an explicit seed for run and eval") {
    ts::TempDir dir;
    const std::string lib = "--library " + q(dir.file("lib.json"));
    REQUIRE(cli(lib + " library init").exit_code == 0);
    const std::string run_args = " run --task " + kBananaTask + " --scene banana_plate_1";

    CHECK(cli("--ci " + lib + run_args).exit_code == 29);
    CHECK(cli("--ci eval --suite suites/banana_table1.json --out " + q(dir.file("out")))
              .exit_code == 29);
    // A seed from the environment is not explicit enough for the gate.
    CHECK(cli_env("SKILLFORGE_SEED=5", "--ci " + lib + run_args).exit_code == 29);
    // With the flag the gate opens (the run then fails on the empty library).
    CHECK(cli("--ci " + lib + run_args + " --seed 5").exit_code == 27);
    // Commands outside run/eval never need a seed.
    CHECK(cli("--ci plan --task " + kBananaTask + " --scene banana_plate_1").exit_code == 0);
}

TEST_CASE("eval writes per-method CSVs and a deterministic report") {
    ts::TempDir dir;
    const std::string suite = "eval --suite suites/banana_table1.json --jobs 4";

    const ts::ProcResult first = cli(suite + " --out " + q(dir.file("a")));
    REQUIRE(first.exit_code == 0);
    CHECK(first.output.rfind("task_id,method,condition,stage_index,stage_label,rate_percent\n",
                             0) == 0);
    CHECK(first.output.find("pick_place_banana,Octo-Ours,banana=OOD plate=OOD,") !=
          std::string::npos);

    const std::string report = slurp(dir.file("a") + "/report.md");
    CHECK(report.find("Trials per cell: 10000, seed: 20240521, retry limit: 0") !=
          std::string::npos);

    REQUIRE(cli(suite + " --out " + q(dir.file("b"))).exit_code == 0);
    for (const std::string name :
         {"report.md", "pick_place_banana/Octo-EndToEnd.csv", "pick_place_banana/Octo-Ours.csv"}) {
        CAPTURE(name);
        const std::string body = slurp(dir.file("a") + "/" + name);
        CHECK_FALSE(body.empty());
        CHECK(body == slurp(dir.file("b") + "/" + name));
    }

    // An explicit seed overrides the suite seed.
    REQUIRE(cli(suite + " --seed 999 --out " + q(dir.file("c"))).exit_code == 0);
    CHECK(slurp(dir.file("c") + "/report.md").find("seed: 999") != std::string::npos);
}
