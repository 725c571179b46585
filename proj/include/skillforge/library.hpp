#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillforge/abstraction.hpp"
#include "skillforge/planner.hpp"

namespace skillforge {

enum class SkillStatus { Defined, DataCollected, Trained, Deprecated };

const char* to_string(SkillStatus status);
SkillStatus skill_status_from_string(const std::string& name);

struct SkillRecord {
    AtomicSkillDefinition definition;
    SkillStatus status = SkillStatus::Defined;
    int demo_count = 0;
    std::optional<std::string> executor_binding;  // executor-profile id
    int version = 1;  // bumps on every record mutation

    bool operator==(const SkillRecord&) const = default;
};

struct UpdateLogEvent {
    std::int64_t timestamp = 0;
    std::string kind;      // created / skill-registered / data-collected / ...
    std::string skill_id;  // empty for library-level events
    std::string detail;

    bool operator==(const UpdateLogEvent&) const = default;
};

struct GapProposal {
    int ordinal = 0;
    AtomicSkillDefinition proposal;

    bool operator==(const GapProposal&) const = default;
};

/// Per-plan coverage: matched and missing partition the subtask ordinals.
struct GapReport {
    std::string task_id;
    std::vector<std::pair<int, std::string>> matched;  // ordinal -> skill_id
    std::vector<GapProposal> missing;

    bool operator==(const GapReport&) const = default;
};

struct ManifestEntry {
    std::string skill_id;
    int demos_required = 0;
    std::vector<std::string> position_grid;

    bool operator==(const ManifestEntry&) const = default;
};

/// Collection plan for newly registered skills, one entry per skill.
struct DataManifest {
    std::vector<ManifestEntry> entries;

    bool operator==(const DataManifest&) const = default;
};

/// Nine named placement points per new skill: the 3x3 grid of the
/// position-generalization protocol.
struct DemoPolicy {
    int demos_per_skill = 9;
    std::vector<std::string> position_grid = {
        "back-left", "back-center", "back-right",  //
        "mid-left",  "mid-center",  "mid-right",   //
        "front-left", "front-center", "front-right"};
};

/// Versioned registry of atomic skills. Granularity is frozen at creation;
/// every mutation appends exactly one update-log event and bumps
/// library_version, so library_version always equals the log length.
class SkillLibrary {
public:
    using Clock = std::function<std::int64_t()>;

    SkillLibrary() = default;
    explicit SkillLibrary(Granularity granularity) : granularity_(granularity) {}

    /// Fresh library with a "created" log event.
    static SkillLibrary create(Granularity granularity);

    Granularity granularity() const { return granularity_; }
    std::int64_t library_version() const { return library_version_; }
    const std::map<std::string, SkillRecord>& records() const { return records_; }
    const std::vector<UpdateLogEvent>& update_log() const { return update_log_; }
    const SkillRecord* find(const std::string& skill_id) const;

    /// Timestamps default to the logical event index; inject a clock to
    /// record wall time instead.
    void set_clock(Clock clock) { clock_ = std::move(clock); }

    /// Matched skill_id for the signature projected at library granularity,
    /// or nullopt. Deprecated records never match; ties go to the highest
    /// record version, then lexicographically smallest id.
    std::optional<std::string> match_subtask(const SkillSignature& signature) const;

    /// Pure coverage check: matches every subtask, then builds definition
    /// proposals for the missing ones via abstraction. Never mutates.
    GapReport gap_report(const TaskPlan& plan, const AbstractionBackend& backend,
                         const Lexicon& lexicon) const;

    /// Registers each missing proposal as a Defined record and returns the
    /// demo-collection manifest. A fully covered plan appends a single no-op
    /// log event and returns an empty manifest.
    DataManifest update_cycle(const TaskPlan& plan, const DemoPolicy& policy,
                              const AbstractionBackend& backend, const Lexicon& lexicon);

    /// Defined -> DataCollected.
    void record_data_collection(const std::string& skill_id, int demo_count);

    /// Defined/DataCollected -> Trained with an executor binding.
    void record_training(const std::string& skill_id, int demo_count,
                         const std::string& executor_binding);

    /// Records are never deleted; deprecation only removes them from matching.
    void deprecate(const std::string& skill_id);

    void save(const std::filesystem::path& path) const;
    static SkillLibrary load(const std::filesystem::path& path);

    bool operator==(const SkillLibrary& other) const;

private:
    SkillRecord& require_record(const std::string& skill_id);
    void log_event(const std::string& kind, const std::string& skill_id,
                   const std::string& detail);

    Granularity granularity_ = Granularity::Medium;
    std::map<std::string, SkillRecord> records_;
    std::int64_t library_version_ = 0;
    std::vector<UpdateLogEvent> update_log_;
    Clock clock_;
};

void to_json(nlohmann::json& j, const AtomicSkillDefinition& definition);
void from_json(const nlohmann::json& j, AtomicSkillDefinition& definition);
void to_json(nlohmann::json& j, const GapReport& report);
void to_json(nlohmann::json& j, const DataManifest& manifest);

}  // namespace skillforge
