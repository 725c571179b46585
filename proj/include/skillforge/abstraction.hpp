#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/lexicon.hpp"

namespace skillforge {

enum class Granularity { Coarse, Medium, Fine };

const char* to_string(Granularity granularity);
Granularity granularity_from_string(const std::string& name);

/// Canonical verb-object(-target) template extracted from a subtask phrase.
struct SkillSignature {
    std::string verb;  // canonical lowercase verb from the lexicon
    std::string object_slot;
    std::optional<std::string> target_slot;
    std::vector<std::string> modifiers;  // sorted qualifier tokens

    bool operator==(const SkillSignature&) const = default;
};

struct AtomicSkillDefinition {
    std::string skill_id;       // pure function of (projected signature, granularity)
    SkillSignature signature;   // projected to `granularity`
    Granularity granularity = Granularity::Medium;
    std::string text_template;  // human-readable instruction template
    std::vector<std::string> created_from;  // source subtask texts, sorted

    bool operator==(const AtomicSkillDefinition&) const = default;
};

/// Parses one imperative phrase into a signature. Verbs fold through the
/// synonym lexicon; "V1 and V2 ..." coordination folds V1 into modifiers;
/// "from X" names the manipulated object for source-oriented verbs; "with"
/// and "by" phrases become modifiers. Throws UnparsablePhrase when no verb
/// matches or no object can be extracted.
SkillSignature canonicalize(const std::string& phrase, const Lexicon& lexicon);

/// Granularity projection. Fine is the identity, Medium and Coarse drop
/// modifiers; Coarse additionally treats the remaining tuple as one fused
/// template key (realized in skill ids and literal templates). Idempotent.
SkillSignature project(const SkillSignature& signature, Granularity granularity);

/// Stable slug `<granularity>/<verb>.<object>[.<target>]`, with sorted
/// "+modifier" suffixes at Fine so ids stay collision-free.
std::string skill_id_for(const SkillSignature& signature, Granularity granularity);

/// Renders the canonical instruction text for a projected signature. The
/// rendering re-canonicalizes to the same projected signature, which is what
/// makes re-abstraction a fixpoint.
std::string render_text_template(const SkillSignature& signature, Granularity granularity,
                                 const Lexicon& lexicon);

/// Pluggable canonicalization backend; the lexicon parser is the default and
/// an HTTP model can stand in behind the same contract.
class AbstractionBackend {
public:
    virtual ~AbstractionBackend() = default;
    virtual std::string id() const = 0;
    virtual SkillSignature canonicalize_phrase(const std::string& phrase) const = 0;
};

class LexiconCanonicalizer : public AbstractionBackend {
public:
    explicit LexiconCanonicalizer(const Lexicon& lexicon) : lexicon_(&lexicon) {}
    std::string id() const override { return "lexicon"; }
    SkillSignature canonicalize_phrase(const std::string& phrase) const override {
        return canonicalize(phrase, *lexicon_);
    }

private:
    const Lexicon* lexicon_;
};

using DefinitionSet = std::map<std::string, AtomicSkillDefinition>;  // keyed by skill_id

struct AbstractionResult {
    DefinitionSet definitions;          // existing plus newly created
    std::vector<std::string> mapping;   // input index -> skill_id
    std::vector<std::string> new_skill_ids;  // sorted
};

/// Maps every subtask text onto exactly one definition, creating new
/// definitions only for unseen projected signatures. Existing definitions
/// are never mutated; output is independent of input order.
AbstractionResult abstract_subtasks(const std::vector<std::string>& subtask_texts,
                                    Granularity granularity, const DefinitionSet& existing,
                                    const AbstractionBackend& backend, const Lexicon& lexicon);

}  // namespace skillforge
