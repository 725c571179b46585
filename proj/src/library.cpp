#include "skillforge/library.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "skillforge/error.hpp"
#include "skillforge/hash.hpp"

namespace skillforge {

namespace {

/// Strict schema guard: every present key must be expected, every expected
/// key must be present (optionals are encoded as null, never omitted).
void require_keys(const nlohmann::json& j, std::initializer_list<const char*> expected,
                  const char* context) {
    if (!j.is_object()) {
        throw Error(ErrorCode::CorruptLibrary, std::string(context) + " is not an object");
    }
    for (const auto& item : j.items()) {
        if (std::find_if(expected.begin(), expected.end(), [&](const char* key) {
                return item.key() == key;
            }) == expected.end()) {
            throw Error(ErrorCode::CorruptLibrary,
                        std::string("unknown field '") + item.key() + "' in " + context);
        }
    }
    for (const char* key : expected) {
        if (!j.contains(key)) {
            throw Error(ErrorCode::CorruptLibrary,
                        std::string("missing field '") + key + "' in " + context);
        }
    }
}

constexpr int kSchemaVersion = 1;

}  // namespace

const char* to_string(SkillStatus status) {
    switch (status) {
        case SkillStatus::Defined: return "defined";
        case SkillStatus::DataCollected: return "data-collected";
        case SkillStatus::Trained: return "trained";
        case SkillStatus::Deprecated: return "deprecated";
    }
    return "defined";
}

SkillStatus skill_status_from_string(const std::string& name) {
    if (name == "defined") return SkillStatus::Defined;
    if (name == "data-collected") return SkillStatus::DataCollected;
    if (name == "trained") return SkillStatus::Trained;
    if (name == "deprecated") return SkillStatus::Deprecated;
    throw Error(ErrorCode::CorruptLibrary, "unknown skill status: " + name);
}

SkillLibrary SkillLibrary::create(Granularity granularity) {
    SkillLibrary lib(granularity);
    lib.log_event("created", "",
                  std::string("granularity ") + to_string(granularity));
    return lib;
}

const SkillRecord* SkillLibrary::find(const std::string& skill_id) const {
    auto it = records_.find(skill_id);
    return it == records_.end() ? nullptr : &it->second;
}

SkillRecord& SkillLibrary::require_record(const std::string& skill_id) {
    auto it = records_.find(skill_id);
    if (it == records_.end()) {
        throw Error(ErrorCode::UnknownSkill, "no record for skill " + skill_id);
    }
    return it->second;
}

void SkillLibrary::log_event(const std::string& kind, const std::string& skill_id,
                             const std::string& detail) {
    UpdateLogEvent event;
    event.timestamp = clock_ ? clock_() : static_cast<std::int64_t>(update_log_.size());
    event.kind = kind;
    event.skill_id = skill_id;
    event.detail = detail;
    update_log_.push_back(std::move(event));
    ++library_version_;
}

std::optional<std::string> SkillLibrary::match_subtask(const SkillSignature& signature) const {
    SkillSignature wanted = project(signature, granularity_);
    const SkillRecord* best = nullptr;
    for (const auto& [id, record] : records_) {
        if (record.status == SkillStatus::Deprecated) continue;
        if (record.definition.signature != wanted) continue;
        if (best == nullptr || record.version > best->version ||
            (record.version == best->version &&
             record.definition.skill_id < best->definition.skill_id)) {
            best = &record;
        }
    }
    if (best == nullptr) return std::nullopt;
    return best->definition.skill_id;
}

GapReport SkillLibrary::gap_report(const TaskPlan& plan, const AbstractionBackend& backend,
                                   const Lexicon& lexicon) const {
    validate_plan(plan);
    GapReport report;
    report.task_id = plan.task.task_id;

    std::vector<int> missing_ordinals;
    std::vector<std::string> missing_texts;
    for (const Subtask& sub : plan.subtasks) {
        if (std::optional<std::string> id = match_subtask(sub.signature)) {
            report.matched.emplace_back(sub.ordinal, *id);
        } else {
            missing_ordinals.push_back(sub.ordinal);
            missing_texts.push_back(sub.text);
        }
    }
    if (missing_texts.empty()) return report;

    DefinitionSet existing;
    for (const auto& [id, record] : records_) {
        if (record.status == SkillStatus::Deprecated) continue;
        existing.emplace(id, record.definition);
    }
    AbstractionResult result =
        abstract_subtasks(missing_texts, granularity_, existing, backend, lexicon);
    for (size_t i = 0; i < missing_ordinals.size(); ++i) {
        GapProposal gap;
        gap.ordinal = missing_ordinals[i];
        gap.proposal = result.definitions.at(result.mapping[i]);
        report.missing.push_back(std::move(gap));
    }
    return report;
}

DataManifest SkillLibrary::update_cycle(const TaskPlan& plan, const DemoPolicy& policy,
                                        const AbstractionBackend& backend,
                                        const Lexicon& lexicon) {
    if (policy.demos_per_skill <= 0) {
        throw Error(ErrorCode::InvalidInput, "demo policy requires a positive demo count");
    }
    GapReport report = gap_report(plan, backend, lexicon);

    std::map<std::string, AtomicSkillDefinition> to_register;
    for (const GapProposal& gap : report.missing) {
        to_register.emplace(gap.proposal.skill_id, gap.proposal);
    }

    DataManifest manifest;
    for (const auto& [skill_id, definition] : to_register) {
        auto it = records_.find(skill_id);
        if (it != records_.end()) {
            // only a Deprecated record can share the id of a missing skill;
            // registration revives it as a fresh definition
            SkillRecord& record = it->second;
            record.definition = definition;
            record.status = SkillStatus::Defined;
            record.demo_count = 0;
            record.executor_binding.reset();
            ++record.version;
            log_event("skill-registered", skill_id, "revived for task " + plan.task.task_id);
        } else {
            SkillRecord record;
            record.definition = definition;
            records_.emplace(skill_id, std::move(record));
            log_event("skill-registered", skill_id, "defined from task " + plan.task.task_id);
        }
        ManifestEntry entry;
        entry.skill_id = skill_id;
        entry.demos_required = policy.demos_per_skill;
        entry.position_grid = policy.position_grid;
        manifest.entries.push_back(std::move(entry));
    }
    if (manifest.entries.empty()) {
        log_event("update-cycle", "", "no gaps for task " + plan.task.task_id);
    }
    return manifest;
}

void SkillLibrary::record_data_collection(const std::string& skill_id, int demo_count) {
    if (demo_count <= 0) {
        throw Error(ErrorCode::InvalidInput, "demo count must be positive");
    }
    SkillRecord& record = require_record(skill_id);
    if (record.status != SkillStatus::Defined) {
        throw Error(ErrorCode::IllegalTransition,
                    std::string("cannot collect data for ") + skill_id + " in status " +
                        to_string(record.status));
    }
    record.status = SkillStatus::DataCollected;
    record.demo_count = demo_count;
    ++record.version;
    log_event("data-collected", skill_id, std::to_string(demo_count) + " demos");
}

void SkillLibrary::record_training(const std::string& skill_id, int demo_count,
                                   const std::string& executor_binding) {
    if (demo_count <= 0) {
        throw Error(ErrorCode::InvalidInput, "demo count must be positive");
    }
    if (executor_binding.empty()) {
        throw Error(ErrorCode::InvalidInput, "executor binding must be non-empty");
    }
    SkillRecord& record = require_record(skill_id);
    if (record.status != SkillStatus::Defined && record.status != SkillStatus::DataCollected) {
        throw Error(ErrorCode::IllegalTransition,
                    std::string("cannot train ") + skill_id + " in status " +
                        to_string(record.status));
    }
    record.status = SkillStatus::Trained;
    record.demo_count = demo_count;
    record.executor_binding = executor_binding;
    ++record.version;
    log_event("training-recorded", skill_id,
              std::to_string(demo_count) + " demos, executor " + executor_binding);
}

void SkillLibrary::deprecate(const std::string& skill_id) {
    SkillRecord& record = require_record(skill_id);
    if (record.status == SkillStatus::Deprecated) {
        throw Error(ErrorCode::IllegalTransition, skill_id + " is already deprecated");
    }
    record.status = SkillStatus::Deprecated;
    ++record.version;
    log_event("skill-deprecated", skill_id, "");
}

bool SkillLibrary::operator==(const SkillLibrary& other) const {
    return granularity_ == other.granularity_ && records_ == other.records_ &&
           library_version_ == other.library_version_ && update_log_ == other.update_log_;
}

void to_json(nlohmann::json& j, const AtomicSkillDefinition& definition) {
    j = nlohmann::json{{"skill_id", definition.skill_id},
                       {"signature", definition.signature},
                       {"granularity", to_string(definition.granularity)},
                       {"text_template", definition.text_template},
                       {"created_from", definition.created_from}};
}

void from_json(const nlohmann::json& j, AtomicSkillDefinition& definition) {
    definition.skill_id = j.at("skill_id").get<std::string>();
    definition.signature = j.at("signature").get<SkillSignature>();
    definition.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    definition.text_template = j.at("text_template").get<std::string>();
    definition.created_from = j.at("created_from").get<std::vector<std::string>>();
}

void to_json(nlohmann::json& j, const GapReport& report) {
    nlohmann::json matched = nlohmann::json::array();
    for (const auto& [ordinal, skill_id] : report.matched) {
        matched.push_back(nlohmann::json{{"ordinal", ordinal}, {"skill_id", skill_id}});
    }
    nlohmann::json missing = nlohmann::json::array();
    for (const GapProposal& gap : report.missing) {
        missing.push_back(nlohmann::json{{"ordinal", gap.ordinal}, {"proposal", gap.proposal}});
    }
    j = nlohmann::json{
        {"task_id", report.task_id}, {"matched", matched}, {"missing", missing}};
}

void to_json(nlohmann::json& j, const DataManifest& manifest) {
    nlohmann::json entries = nlohmann::json::array();
    for (const ManifestEntry& entry : manifest.entries) {
        entries.push_back(nlohmann::json{{"skill_id", entry.skill_id},
                                         {"demos_required", entry.demos_required},
                                         {"position_grid", entry.position_grid}});
    }
    j = nlohmann::json{{"entries", entries}};
}

namespace {

nlohmann::json record_to_json(const SkillRecord& record) {
    nlohmann::json j{{"definition", record.definition},
                     {"status", to_string(record.status)},
                     {"demo_count", record.demo_count},
                     {"version", record.version}};
    if (record.executor_binding.has_value()) {
        j["executor_binding"] = *record.executor_binding;
    } else {
        j["executor_binding"] = nullptr;
    }
    return j;
}

SkillRecord record_from_json(const nlohmann::json& j) {
    require_keys(j, {"definition", "status", "demo_count", "executor_binding", "version"},
                 "skill record");
    SkillRecord record;
    try {
        record.definition = j.at("definition").get<AtomicSkillDefinition>();
        record.status = skill_status_from_string(j.at("status").get<std::string>());
        record.demo_count = j.at("demo_count").get<int>();
        if (!j.at("executor_binding").is_null()) {
            record.executor_binding = j.at("executor_binding").get<std::string>();
        }
        record.version = j.at("version").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptLibrary, std::string("bad skill record: ") + e.what());
    }
    if (record.demo_count < 0 || record.version < 1) {
        throw Error(ErrorCode::CorruptLibrary, "negative demo count or version");
    }
    if (record.status == SkillStatus::Trained &&
        (!record.executor_binding.has_value() || record.demo_count == 0)) {
        throw Error(ErrorCode::CorruptLibrary,
                    "trained record lacks executor binding or demos: " +
                        record.definition.skill_id);
    }
    return record;
}

}  // namespace

void SkillLibrary::save(const std::filesystem::path& path) const {
    nlohmann::json records = nlohmann::json::object();
    for (const auto& [id, record] : records_) {
        records[id] = record_to_json(record);
    }
    nlohmann::json log = nlohmann::json::array();
    for (const UpdateLogEvent& event : update_log_) {
        log.push_back(nlohmann::json{{"timestamp", event.timestamp},
                                     {"kind", event.kind},
                                     {"skill_id", event.skill_id},
                                     {"detail", event.detail}});
    }
    nlohmann::json library{{"granularity", to_string(granularity_)},
                           {"library_version", library_version_},
                           {"records", std::move(records)},
                           {"update_log", std::move(log)}};
    nlohmann::json doc{{"schema_version", kSchemaVersion},
                       {"checksum", sha256_hex(library.dump())},
                       {"library", std::move(library)}};

    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
        }
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out << doc.dump(2) << '\n';
        out.flush();
        if (!out) {
            throw Error(ErrorCode::IoError, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError,
                    "cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

SkillLibrary SkillLibrary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read library file: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptLibrary,
                    "unparsable library file " + path.string() + ": " + e.what());
    }
    require_keys(doc, {"schema_version", "checksum", "library"}, "library document");
    if (!doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "library schema " + doc["schema_version"].dump() + ", expected " +
                        std::to_string(kSchemaVersion));
    }
    const nlohmann::json& library = doc["library"];
    require_keys(library, {"granularity", "library_version", "records", "update_log"},
                 "library body");
    if (!doc["checksum"].is_string() ||
        doc["checksum"].get<std::string>() != sha256_hex(library.dump())) {
        throw Error(ErrorCode::CorruptLibrary, "library checksum mismatch: " + path.string());
    }

    SkillLibrary lib;
    try {
        lib.granularity_ = granularity_from_string(library["granularity"].get<std::string>());
        lib.library_version_ = library["library_version"].get<std::int64_t>();
        for (const auto& item : library["records"].items()) {
            SkillRecord record = record_from_json(item.value());
            if (record.definition.skill_id != item.key()) {
                throw Error(ErrorCode::CorruptLibrary,
                            "record key does not match its skill_id: " + item.key());
            }
            lib.records_.emplace(item.key(), std::move(record));
        }
        for (const nlohmann::json& entry : library["update_log"]) {
            require_keys(entry, {"timestamp", "kind", "skill_id", "detail"}, "log event");
            UpdateLogEvent event;
            event.timestamp = entry["timestamp"].get<std::int64_t>();
            event.kind = entry["kind"].get<std::string>();
            event.skill_id = entry["skill_id"].get<std::string>();
            event.detail = entry["detail"].get<std::string>();
            lib.update_log_.push_back(std::move(event));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptLibrary, std::string("bad library body: ") + e.what());
    }
    if (lib.library_version_ != static_cast<std::int64_t>(lib.update_log_.size())) {
        throw Error(ErrorCode::CorruptLibrary,
                    "library_version does not equal the update_log length");
    }
    return lib;
}

}  // namespace skillforge
