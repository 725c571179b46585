#include "doctest.h"

#include <algorithm>

#include "skillforge/error.hpp"
#include "skillforge/perception.hpp"
#include "skillforge/planner.hpp"
#include "support/checks.hpp"
#include "support/paths.hpp"

namespace sf = skillforge;
namespace ts = skillforge::testsupport;
using skillforge::testsupport::throws_code;

namespace {

const sf::Lexicon& lexicon() {
    static sf::Lexicon lex = sf::Lexicon::load(ts::repo_file("lexicon/verbs.json"));
    return lex;
}

const sf::MockRulePlanner& mock_planner() {
    static sf::MockRulePlanner planner =
        sf::MockRulePlanner::load(ts::repo_file("fixtures/planner_rules.json"), lexicon());
    return planner;
}

sf::PromptTemplate repo_template() {
    return sf::PromptTemplate::load(ts::repo_file("templates/vlp_prompt.txt"));
}

std::string plan_for(const std::string& instruction) {
    return mock_planner().complete("Instruction: " + instruction);
}

sf::TaskPlan two_step_plan() {
    sf::TaskPlan plan;
    plan.task = {"t", "do the thing"};
    plan.scene_id = "s";
    for (int i = 1; i <= 2; ++i) {
        sf::Subtask sub;
        sub.ordinal = i;
        sub.text = "step " + std::to_string(i);
        sub.signature.verb = "move";
        sub.signature.object_slot = "thing";
        plan.subtasks.push_back(sub);
    }
    return plan;
}

struct ScriptedPlanner : sf::PlannerBackend {
    std::vector<std::string> replies;
    mutable std::size_t calls = 0;

    std::string backend_id() const override { return "scripted"; }
    std::string complete(const std::string&) const override {
        if (calls >= replies.size()) return replies.back();
        return replies[calls++];
    }
};

}  // namespace

TEST_CASE("validate_plan enforces contiguous ordinals and a single active") {
    sf::TaskPlan plan = two_step_plan();
    CHECK_NOTHROW(sf::validate_plan(plan));

    sf::TaskPlan gap = plan;
    gap.subtasks[1].ordinal = 3;
    CHECK(throws_code(sf::ErrorCode::InconsistentPlanState, [&] { sf::validate_plan(gap); }));

    sf::TaskPlan doubled = plan;
    doubled.subtasks[0].status = sf::SubtaskStatus::Active;
    doubled.subtasks[1].status = sf::SubtaskStatus::Active;
    CHECK(throws_code(sf::ErrorCode::InconsistentPlanState, [&] { sf::validate_plan(doubled); }));
}

TEST_CASE("prompt templates require all four placeholders") {
    CHECK_NOTHROW(repo_template());
    CHECK_NOTHROW(sf::PromptTemplate::from_string(
        "{description} {relations} {objects} {instruction}"));
    CHECK(throws_code(sf::ErrorCode::InvalidInput, [] {
        sf::PromptTemplate::from_string("{description} {objects} {instruction}");
    }));
    CHECK(throws_code(sf::ErrorCode::IoError,
                      [] { sf::PromptTemplate::load("/nonexistent/prompt.txt"); }));
}

TEST_CASE("build_prompt renders relations as label triples") {
    const sf::FixturePerception perception(ts::repo_file("fixtures"));
    sf::PerceptionRequest request;
    request.scene_id = "banana_plate_1";
    const sf::SceneGraph scene = sf::build_scene_graph(perception, request);

    const std::string prompt =
        sf::build_prompt({"t1", "Pick up the banana"}, scene, repo_template());
    CHECK(prompt.find("banana LeftOf plate") != std::string::npos);
    CHECK(prompt.find("Instruction: Pick up the banana") != std::string::npos);
    CHECK(prompt.find("banana, plate") != std::string::npos);
    CHECK(prompt.find("{") == std::string::npos);

    sf::SceneGraph empty;
    empty.scene_id = "void";
    empty.description = "an empty table";
    const std::string bare = sf::build_prompt({"t2", "wave"}, empty, repo_template());
    CHECK(bare.find("none observed") != std::string::npos);
}

TEST_CASE("parse_plan_response accepts the numbered grammar") {
    const auto steps = sf::parse_plan_response("PLAN:\n1. Pick up the pen\n2. Place it\nNEXT: 1\n");
    CHECK(steps == std::vector<std::string>{"Pick up the pen", "Place it"});

    // Blank lines are tolerated; parsing stops at NEXT.
    const auto spaced = sf::parse_plan_response("\nPLAN:\n\n1. One\n\nNEXT: 9\n3. ignored\n");
    CHECK(spaced == std::vector<std::string>{"One"});
}

TEST_CASE("parse_plan_response rejects malformed responses") {
    const auto rejects = [](const std::string& raw) {
        return throws_code(sf::ErrorCode::MalformedPlannerResponse,
                           [&] { sf::parse_plan_response(raw); });
    };
    CHECK(rejects(""));
    CHECK(rejects("1. no plan header"));
    CHECK(rejects("chatter first\nPLAN:\n1. x"));
    CHECK(rejects("PLAN:"));
    CHECK(rejects("PLAN:\nstep without number"));
    CHECK(rejects("PLAN:\n2. starts at two"));
    CHECK(rejects("PLAN:\n1. one\n3. three"));
    CHECK(rejects("PLAN:\n1."));
}

TEST_CASE("parse_next_hint reads well-formed hints only") {
    CHECK(sf::parse_next_hint("PLAN:\n1. x\nNEXT: 2\n") == 2);
    CHECK(sf::parse_next_hint("NEXT: 14") == 14);
    CHECK_FALSE(sf::parse_next_hint("no hint here").has_value());
    CHECK_FALSE(sf::parse_next_hint("NEXT: soon").has_value());
    CHECK_FALSE(sf::parse_next_hint("NEXT:").has_value());
}

TEST_CASE("mock planner rules expand with captures") {
    CHECK(plan_for("Pick up the banana and place it onto the plate") ==
          "PLAN:\n1. Pick up the banana\n2. Place the banana onto the plate\nNEXT: 1\n");

    CHECK(plan_for("Pour the water from the bottle into the mug") ==
          "PLAN:\n1. Lift up the bottle\n2. Align and tilt the bottle towards the mug\nNEXT: 1\n");

    CHECK(plan_for("Give the guest a cup of water") ==
          "PLAN:\n1. Lift up the bottle\n2. Align and tilt the bottle towards the cup\n"
          "3. Deliver the cup to the guest\nNEXT: 1\n");

    CHECK(plan_for("Move the blocks in the order red, green, blue") ==
          "PLAN:\n1. Move the red block\n2. Move the green block\n3. Move the blue block\n"
          "NEXT: 1\n");

    // Case-insensitive matching, and the last Instruction: line wins.
    CHECK(mock_planner().complete(
              "Instruction: ignored\nInstruction: PICK UP THE PEN and place it in the cup") ==
          "PLAN:\n1. Pick up the PEN\n2. Place the PEN onto the cup\nNEXT: 1\n");

    CHECK(throws_code(sf::ErrorCode::InvalidInput,
                      [] { mock_planner().complete("no instruction line"); }));
}

TEST_CASE("mock planner falls back to clause splitting with pronoun resolution") {
    CHECK(plan_for("Lift up the bottle, then tilt it towards the mug") ==
          "PLAN:\n1. Lift up the bottle\n2. tilt the bottle towards the mug\nNEXT: 1\n");

    CHECK(plan_for("Grab the pen and then put it into the pen holder") ==
          "PLAN:\n1. Grab the pen\n2. put the pen into the pen holder\nNEXT: 1\n");

    // Coordinated verbs survive; only sequencing cues split.
    CHECK(plan_for("Align and tilt the bottle towards the cup") ==
          "PLAN:\n1. Align and tilt the bottle towards the cup\nNEXT: 1\n");

    CHECK(plan_for("First grasp the handle; then open the drawer") ==
          "PLAN:\n1. grasp the handle\n2. open the drawer\nNEXT: 1\n");
}

TEST_CASE("decompose builds a canonicalized plan with provenance") {
    sf::SceneGraph scene;
    scene.scene_id = "synthetic";
    scene.description = "a test bench";

    const sf::LexiconCanonicalizer canonicalizer(lexicon());
    const sf::TaskPlan plan =
        sf::decompose({"banana-1", "Pick up the banana and place it onto the plate"}, scene,
                      mock_planner(), canonicalizer, repo_template());

    CHECK(plan.task.task_id == "banana-1");
    CHECK(plan.scene_id == "synthetic");
    CHECK(plan.provenance.backend_id == "mock-rule-table");
    CHECK(plan.provenance.prompt_hash.size() == 64);
    REQUIRE(plan.subtasks.size() == 2);
    CHECK(plan.subtasks[0].ordinal == 1);
    CHECK(plan.subtasks[0].signature.verb == "pick-up");
    CHECK(plan.subtasks[0].signature.object_slot == "banana");
    CHECK(plan.subtasks[1].signature.verb == "place");
    CHECK(plan.subtasks[1].signature.target_slot == std::optional<std::string>("plate"));
    CHECK(plan.subtasks[0].status == sf::SubtaskStatus::Pending);
    CHECK_NOTHROW(sf::validate_plan(plan));
}

TEST_CASE("decompose rejects empty instructions before prompting") {
    sf::SceneGraph scene;
    scene.scene_id = "synthetic";
    const sf::LexiconCanonicalizer canonicalizer(lexicon());
    CHECK(throws_code(sf::ErrorCode::EmptyInstruction, [&] {
        sf::decompose({"t", "   "}, scene, mock_planner(), canonicalizer, repo_template());
    }));
}

TEST_CASE("decompose retries malformed responses up to the limit") {
    sf::SceneGraph scene;
    scene.scene_id = "synthetic";
    scene.description = "bench";
    const sf::LexiconCanonicalizer canonicalizer(lexicon());

    ScriptedPlanner flaky;
    flaky.replies = {"gibberish", "也 not a plan", "PLAN:\n1. Pick up the pen\n"};
    const sf::TaskPlan plan =
        sf::decompose({"t", "whatever"}, scene, flaky, canonicalizer, repo_template());
    CHECK(plan.subtasks.size() == 1);
    CHECK(flaky.calls == 3);

    ScriptedPlanner hopeless;
    hopeless.replies = {"still not a plan"};
    CHECK(throws_code(sf::ErrorCode::MalformedPlannerResponse, [&] {
        sf::decompose({"t", "whatever"}, scene, hopeless, canonicalizer, repo_template());
    }));

    ScriptedPlanner strict;
    strict.replies = {"gibberish", "PLAN:\n1. ok\n"};
    sf::DecomposeOptions no_retries;
    no_retries.malformed_retry_limit = 0;
    CHECK(throws_code(sf::ErrorCode::MalformedPlannerResponse, [&] {
        sf::decompose({"t", "whatever"}, scene, strict, canonicalizer, repo_template(),
                      no_retries);
    }));
}

TEST_CASE("next_directive walks execute/complete on success") {
    sf::TaskPlan plan = two_step_plan();

    const sf::PlannerDirective first = sf::next_directive(plan, std::nullopt, 0);
    CHECK(first.kind == sf::PlannerDirective::Kind::Execute);
    CHECK(first.ordinal == 1);
    CHECK(plan.subtasks[0].status == sf::SubtaskStatus::Active);
    CHECK(plan.subtasks[0].attempts == 1);

    const sf::PlannerDirective second = sf::next_directive(plan, true, 0);
    CHECK(second.kind == sf::PlannerDirective::Kind::Execute);
    CHECK(second.ordinal == 2);
    CHECK(plan.subtasks[0].status == sf::SubtaskStatus::Done);

    const sf::PlannerDirective done = sf::next_directive(plan, true, 0);
    CHECK(done.kind == sf::PlannerDirective::Kind::Complete);
    CHECK(plan.subtasks[1].status == sf::SubtaskStatus::Done);
}

TEST_CASE("next_directive retries within budget then aborts") {
    sf::TaskPlan plan = two_step_plan();

    CHECK(sf::next_directive(plan, std::nullopt, 1).kind == sf::PlannerDirective::Kind::Execute);

    const sf::PlannerDirective retry = sf::next_directive(plan, false, 1);
    CHECK(retry.kind == sf::PlannerDirective::Kind::Retry);
    CHECK(retry.ordinal == 1);
    CHECK(retry.attempt == 1);
    CHECK(plan.subtasks[0].attempts == 2);

    const sf::PlannerDirective abort = sf::next_directive(plan, false, 1);
    CHECK(abort.kind == sf::PlannerDirective::Kind::Abort);
    CHECK(plan.subtasks[0].status == sf::SubtaskStatus::Failed);

    // A failed subtask keeps the plan aborted on every later consult.
    const sf::PlannerDirective still = sf::next_directive(plan, std::nullopt, 1);
    CHECK(still.kind == sf::PlannerDirective::Kind::Abort);
    CHECK(plan.subtasks[1].status == sf::SubtaskStatus::Pending);
}

TEST_CASE("next_directive detects outcome/state mismatches") {
    sf::TaskPlan plan = two_step_plan();
    CHECK(throws_code(sf::ErrorCode::InconsistentPlanState,
                      [&] { sf::next_directive(plan, true, 0); }));

    sf::next_directive(plan, std::nullopt, 0);
    CHECK(throws_code(sf::ErrorCode::InconsistentPlanState,
                      [&] { sf::next_directive(plan, std::nullopt, 0); }));
    CHECK(throws_code(sf::ErrorCode::InvalidInput, [&] { sf::next_directive(plan, true, -1); }));
}

TEST_CASE("query_next_step reports the active else first pending ordinal") {
    sf::TaskPlan plan = two_step_plan();
    CHECK(sf::query_next_step(mock_planner(), plan, "prompt") == 1);

    plan.subtasks[0].status = sf::SubtaskStatus::Done;
    CHECK(sf::query_next_step(mock_planner(), plan, "prompt") == 2);

    plan.subtasks[1].status = sf::SubtaskStatus::Active;
    CHECK(sf::query_next_step(mock_planner(), plan, "prompt") == 2);

    plan.subtasks[1].status = sf::SubtaskStatus::Done;
    CHECK_FALSE(sf::query_next_step(mock_planner(), plan, "prompt").has_value());

    // Backends without re-planning yield no directive override.
    ScriptedPlanner scripted;
    scripted.replies = {"unused"};
    CHECK_FALSE(sf::query_next_step(scripted, plan, "prompt").has_value());
}

TEST_CASE("task plans round-trip through JSON") {
    sf::SceneGraph scene;
    scene.scene_id = "synthetic";
    scene.description = "bench";
    const sf::LexiconCanonicalizer canonicalizer(lexicon());
    const sf::TaskPlan plan =
        sf::decompose({"rt", "Pour the water from the bottle into the mug"}, scene,
                      mock_planner(), canonicalizer, repo_template());

    const nlohmann::json j = plan;
    const sf::TaskPlan copy = j.get<sf::TaskPlan>();
    CHECK(copy == plan);

    nlohmann::json broken = j;
    broken["subtasks"][0]["ordinal"] = 7;
    CHECK(throws_code(sf::ErrorCode::InconsistentPlanState,
                      [&] { (void)broken.get<sf::TaskPlan>(); }));
}

TEST_CASE("signature JSON keeps the null target distinction") {
    sf::SkillSignature sig;
    sig.verb = "pick-up";
    sig.object_slot = "banana";
    const nlohmann::json j = sig;
    CHECK(j.at("target").is_null());
    CHECK(j.get<sf::SkillSignature>() == sig);

    sig.target_slot = "plate";
    sig.modifiers = {"align"};
    const nlohmann::json j2 = sig;
    CHECK(j2.get<sf::SkillSignature>() == sig);
}
