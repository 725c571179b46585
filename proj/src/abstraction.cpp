#include "skillforge/abstraction.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "skillforge/error.hpp"

namespace skillforge {

const char* to_string(Granularity granularity) {
    switch (granularity) {
        case Granularity::Coarse: return "coarse";
        case Granularity::Medium: return "medium";
        case Granularity::Fine: return "fine";
    }
    return "?";
}

Granularity granularity_from_string(const std::string& name) {
    if (name == "coarse") return Granularity::Coarse;
    if (name == "medium") return Granularity::Medium;
    if (name == "fine") return Granularity::Fine;
    throw Error(ErrorCode::InvalidInput, "unknown granularity '" + name + "'");
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& tok : tokens) {
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

std::string slugify(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += c;
        } else if (!out.empty() && out.back() != '-') {
            out += '-';
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

}  // namespace

SkillSignature canonicalize(const std::string& phrase, const Lexicon& lexicon) {
    const std::vector<std::string> tokens = tokenize_phrase(phrase);
    if (tokens.empty()) {
        throw Error(ErrorCode::UnparsablePhrase, "empty phrase");
    }

    SkillSignature sig;
    std::size_t pos = 0;
    while (pos < tokens.size() && lexicon.is_stopword(tokens[pos])) ++pos;

    auto head = lexicon.match_verb(tokens, pos);
    if (!head) {
        throw Error(ErrorCode::UnparsablePhrase, "no verb match in '" + phrase + "'");
    }
    pos += head->second;
    sig.verb = head->first;

    // "align and tilt the bottle ..." folds the leading verb into modifiers.
    if (pos < tokens.size() && tokens[pos] == "and") {
        if (auto second = lexicon.match_verb(tokens, pos + 1)) {
            sig.modifiers.push_back(sig.verb);
            sig.verb = second->first;
            pos += 1 + second->second;
        }
    }

    // Split the remainder into the pre-preposition segment and one segment
    // per preposition, dropping articles and pronouns along the way.
    std::vector<std::string> pre;
    std::vector<std::pair<std::string, std::vector<std::string>>> segments;
    std::vector<std::string>* current = &pre;
    for (; pos < tokens.size(); ++pos) {
        const std::string& tok = tokens[pos];
        const std::string prep_class = lexicon.preposition_class(tok);
        if (!prep_class.empty()) {
            segments.emplace_back(prep_class, std::vector<std::string>{});
            current = &segments.back().second;
            continue;
        }
        if (lexicon.is_article(tok) || lexicon.is_pronoun(tok) || lexicon.is_stopword(tok)) {
            continue;
        }
        current->push_back(tok);
    }

    std::vector<std::string> source;
    std::vector<std::string> target;
    for (const auto& [prep_class, words] : segments) {
        if (words.empty()) continue;
        if (prep_class == "source") {
            source = words;
        } else if (prep_class == "target") {
            target = words;  // the last target phrase wins
        } else {
            for (const auto& w : words) sig.modifiers.push_back(w);
        }
    }

    const bool object_from_source = lexicon.verb_entry(sig.verb).object_from_source;
    if (!source.empty() && (object_from_source || pre.empty())) {
        sig.object_slot = join_tokens(source);
        for (const auto& w : pre) sig.modifiers.push_back(w);
    } else {
        sig.object_slot = join_tokens(pre);
        for (const auto& w : source) sig.modifiers.push_back(w);
    }
    if (sig.object_slot.empty()) {
        throw Error(ErrorCode::UnparsablePhrase, "no object in '" + phrase + "'");
    }
    if (!target.empty()) {
        sig.target_slot = join_tokens(target);
    }

    std::sort(sig.modifiers.begin(), sig.modifiers.end());
    sig.modifiers.erase(std::unique(sig.modifiers.begin(), sig.modifiers.end()),
                        sig.modifiers.end());
    return sig;
}

SkillSignature project(const SkillSignature& signature, Granularity granularity) {
    SkillSignature out = signature;
    std::sort(out.modifiers.begin(), out.modifiers.end());
    if (granularity != Granularity::Fine) {
        out.modifiers.clear();
    }
    return out;
}

std::string skill_id_for(const SkillSignature& signature, Granularity granularity) {
    const SkillSignature proj = project(signature, granularity);
    std::string id = std::string(to_string(granularity)) + "/" + slugify(proj.verb) + "." +
                     slugify(proj.object_slot);
    if (proj.target_slot) {
        id += "." + slugify(*proj.target_slot);
    }
    for (const auto& mod : proj.modifiers) {
        id += "+" + slugify(mod);
    }
    return id;
}

std::string render_text_template(const SkillSignature& signature, Granularity granularity,
                                 const Lexicon& lexicon) {
    const SkillSignature proj = project(signature, granularity);
    const VerbEntry& verb = lexicon.verb_entry(proj.verb);

    std::string text;
    std::vector<std::string> trailing;
    for (const auto& mod : proj.modifiers) {
        if (lexicon.is_canonical_verb(mod)) {
            text += lexicon.verb_entry(mod).display + " and ";
        } else {
            trailing.push_back(mod);
        }
    }
    text += verb.display;
    text += verb.object_from_source ? " from the " : " the ";
    text += proj.object_slot;
    if (proj.target_slot) {
        text += " " + verb.target_preposition + " the " + *proj.target_slot;
    }
    for (const auto& mod : trailing) {
        text += " with the " + mod;
    }
    return text;
}

AbstractionResult abstract_subtasks(const std::vector<std::string>& subtask_texts,
                                    Granularity granularity, const DefinitionSet& existing,
                                    const AbstractionBackend& backend, const Lexicon& lexicon) {
    AbstractionResult result;
    result.definitions = existing;
    result.mapping.reserve(subtask_texts.size());

    std::set<std::string> created;
    for (const auto& text : subtask_texts) {
        const SkillSignature sig = backend.canonicalize_phrase(text);
        const SkillSignature proj = project(sig, granularity);
        const std::string id = skill_id_for(proj, granularity);
        result.mapping.push_back(id);

        auto it = result.definitions.find(id);
        if (it == result.definitions.end()) {
            AtomicSkillDefinition def;
            def.skill_id = id;
            def.signature = proj;
            def.granularity = granularity;
            def.text_template = render_text_template(proj, granularity, lexicon);
            def.created_from.push_back(text);
            result.definitions.emplace(id, std::move(def));
            created.insert(id);
        } else if (created.count(id)) {
            // Definitions born in this batch keep collecting their sources;
            // pre-existing ones are never touched.
            auto& sources = it->second.created_from;
            if (std::find(sources.begin(), sources.end(), text) == sources.end()) {
                sources.push_back(text);
            }
        }
    }

    for (const auto& id : created) {
        auto& sources = result.definitions.at(id).created_from;
        std::sort(sources.begin(), sources.end());
    }
    result.new_skill_ids.assign(created.begin(), created.end());
    return result;
}

}  // namespace skillforge
