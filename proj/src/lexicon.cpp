#include "skillforge/lexicon.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "skillforge/error.hpp"

namespace skillforge {

using nlohmann::json;

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string strip_punct(const std::string& token) {
    std::size_t begin = 0;
    std::size_t end = token.size();
    while (begin < end && !std::isalnum(static_cast<unsigned char>(token[begin]))) ++begin;
    while (end > begin && !std::isalnum(static_cast<unsigned char>(token[end - 1]))) --end;
    return token.substr(begin, end - begin);
}

}  // namespace

std::vector<std::string> tokenize_phrase(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream stream(lowercase(text));
    std::string word;
    while (stream >> word) {
        std::string cleaned = strip_punct(word);
        if (!cleaned.empty()) tokens.push_back(std::move(cleaned));
    }
    return tokens;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read lexicon " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, "bad lexicon " + path.string() + ": " + e.what());
    }

    Lexicon lex;
    for (const auto& [canonical, entry] : j.at("verbs").items()) {
        VerbEntry verb;
        verb.display = entry.value("display", canonical);
        verb.target_preposition = entry.value("target_preposition", "to");
        verb.object_from_source = entry.value("object_from_source", false);
        lex.verbs_[canonical] = verb;
        // The display form and the de-hyphenated canonical always fold to
        // the canonical verb, so lexicon authors list only true synonyms.
        std::string spaced = canonical;
        std::replace(spaced.begin(), spaced.end(), '-', ' ');
        lex.synonyms_[verb.display] = canonical;
        lex.synonyms_[spaced] = canonical;
    }
    for (const auto& [surface, canonical] : j.at("synonyms").items()) {
        if (!lex.verbs_.count(canonical.get<std::string>())) {
            throw Error(ErrorCode::InvalidInput,
                        "lexicon synonym '" + surface + "' maps to unknown verb");
        }
        lex.synonyms_[lowercase(surface)] = canonical.get<std::string>();
    }
    for (const auto& [surface, canonical] : lex.synonyms_) {
        (void)canonical;
        const std::size_t words =
            1 + static_cast<std::size_t>(std::count(surface.begin(), surface.end(), ' '));
        lex.max_synonym_tokens_ = std::max(lex.max_synonym_tokens_, words);
    }

    lex.articles_ = {"the", "a", "an"};
    lex.pronouns_ = {"it", "them", "this", "that", "these", "those"};
    lex.stopwords_ = {"and", "or", "then", "please", "now", "first", "next", "finally"};
    lex.prepositions_ = {
        {"from", "source"},     {"with", "modifier"}, {"by", "modifier"},
        {"onto", "target"},     {"into", "target"},   {"to", "target"},
        {"towards", "target"},  {"toward", "target"}, {"on", "target"},
        {"in", "target"},       {"at", "target"},     {"over", "target"},
        {"under", "target"},    {"near", "target"},   {"behind", "target"},
        {"beside", "target"},   {"of", "modifier"},
    };
    return lex;
}

std::optional<std::pair<std::string, std::size_t>> Lexicon::match_verb(
    const std::vector<std::string>& tokens, std::size_t pos) const {
    const std::size_t max_len = std::min(max_synonym_tokens_, tokens.size() - pos);
    for (std::size_t len = max_len; len >= 1; --len) {
        std::string candidate;
        for (std::size_t i = 0; i < len; ++i) {
            if (i > 0) candidate += ' ';
            candidate += tokens[pos + i];
        }
        auto it = synonyms_.find(candidate);
        if (it != synonyms_.end()) {
            return std::make_pair(it->second, len);
        }
    }
    return std::nullopt;
}

bool Lexicon::is_canonical_verb(const std::string& verb) const {
    return verbs_.count(verb) > 0;
}

const VerbEntry& Lexicon::verb_entry(const std::string& canonical) const {
    auto it = verbs_.find(canonical);
    if (it == verbs_.end()) {
        throw Error(ErrorCode::UnparsablePhrase, "unknown canonical verb '" + canonical + "'");
    }
    return it->second;
}

std::vector<std::string> Lexicon::canonical_verbs() const {
    std::vector<std::string> verbs;
    verbs.reserve(verbs_.size());
    for (const auto& [canonical, entry] : verbs_) {
        (void)entry;
        verbs.push_back(canonical);
    }
    return verbs;
}

bool Lexicon::is_article(const std::string& token) const { return articles_.count(token) > 0; }
bool Lexicon::is_stopword(const std::string& token) const { return stopwords_.count(token) > 0; }
bool Lexicon::is_pronoun(const std::string& token) const { return pronouns_.count(token) > 0; }

std::string Lexicon::preposition_class(const std::string& token) const {
    auto it = prepositions_.find(token);
    return it == prepositions_.end() ? std::string() : it->second;
}

std::vector<std::string> extract_label_hints(const std::string& instruction,
                                             const Lexicon& lexicon) {
    const std::vector<std::string> tokens = tokenize_phrase(instruction);

    // Content tokens with their original positions, so bigrams only form
    // across genuinely adjacent words.
    std::vector<std::pair<std::size_t, std::string>> content;
    std::size_t pos = 0;
    while (pos < tokens.size()) {
        if (auto verb = lexicon.match_verb(tokens, pos)) {
            pos += verb->second;
            continue;
        }
        const std::string& tok = tokens[pos];
        if (!lexicon.is_article(tok) && !lexicon.is_stopword(tok) && !lexicon.is_pronoun(tok) &&
            lexicon.preposition_class(tok).empty()) {
            content.emplace_back(pos, tok);
        }
        ++pos;
    }

    std::set<std::string> hints;
    for (std::size_t i = 0; i < content.size(); ++i) {
        hints.insert(content[i].second);
        if (i + 1 < content.size() && content[i + 1].first == content[i].first + 1) {
            hints.insert(content[i].second + " " + content[i + 1].second);
        }
    }
    return {hints.begin(), hints.end()};
}

}  // namespace skillforge
