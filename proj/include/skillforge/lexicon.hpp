#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace skillforge {

/// Per-verb metadata from the lexicon file.
struct VerbEntry {
    std::string display;             // surface form, e.g. "pick up" for pick-up
    std::string target_preposition;  // preposition used when rendering a target
    bool object_from_source = false; // direct object names the contents; the
                                     // manipulated object follows "from"
};

/// Verb synonym lexicon plus the closed token sets used by the phrase
/// grammar. Loaded once from `lexicon/verbs.json`; immutable afterwards.
class Lexicon {
public:
    static Lexicon load(const std::filesystem::path& path);

    /// Longest synonym match starting at `pos`; returns the canonical verb
    /// and the number of tokens consumed.
    std::optional<std::pair<std::string, std::size_t>> match_verb(
        const std::vector<std::string>& tokens, std::size_t pos) const;

    bool is_canonical_verb(const std::string& verb) const;
    const VerbEntry& verb_entry(const std::string& canonical) const;
    std::vector<std::string> canonical_verbs() const;

    bool is_article(const std::string& token) const;
    bool is_stopword(const std::string& token) const;
    bool is_pronoun(const std::string& token) const;
    /// Preposition class: "" if not a preposition, otherwise one of
    /// "source" (from), "modifier" (with/by) or "target".
    std::string preposition_class(const std::string& token) const;

private:
    std::map<std::string, VerbEntry> verbs_;          // canonical -> entry
    std::map<std::string, std::string> synonyms_;     // surface form -> canonical
    std::size_t max_synonym_tokens_ = 1;
    std::set<std::string> articles_;
    std::set<std::string> stopwords_;
    std::set<std::string> pronouns_;
    std::map<std::string, std::string> prepositions_; // token -> class
};

/// Lowercased word tokens with surrounding punctuation stripped.
std::vector<std::string> tokenize_phrase(const std::string& text);

/// Candidate object labels for the detector: content unigrams plus
/// adjacent-content bigrams from the instruction, minus grammar tokens.
std::vector<std::string> extract_label_hints(const std::string& instruction, const Lexicon& lexicon);

}  // namespace skillforge
