#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "tpcl/dataset.hpp"

namespace tpcl {

using json = nlohmann::json;

std::string_view to_string(CoarseGroup group) {
  switch (group) {
    case CoarseGroup::Wh: return "wh";
    case CoarseGroup::YesNo: return "yesno";
    case CoarseGroup::Number: return "number";
    case CoarseGroup::Other: return "other";
  }
  return "other";
}

CoarseGroup coarse_group_from_string(std::string_view name) {
  if (name == "wh") return CoarseGroup::Wh;
  if (name == "yesno") return CoarseGroup::YesNo;
  if (name == "number") return CoarseGroup::Number;
  if (name == "other") return CoarseGroup::Other;
  throw ValidationError("unknown coarse group '" + std::string(name) + "'");
}

TypeLexicon::TypeLexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& e = entries_[i];
    e.type_id = static_cast<TaskId>(i);
    if (e.prefix.empty()) throw ValidationError("lexicon entry " + std::to_string(i) + " has an empty prefix");
    if (!by_prefix_.emplace(e.prefix, e.type_id).second)
      throw ValidationError("duplicate lexicon prefix '" + e.prefix + "'");
    if (e.prefix == kFallbackPrefix) fallback_ = e.type_id;
  }
}

const TypeLexicon& TypeLexicon::default_lexicon() {
  static const TypeLexicon lexicon = [] {
    using G = CoarseGroup;
    std::vector<LexiconEntry> entries;
    auto add = [&](G group, std::initializer_list<const char*> prefixes) {
      for (const char* p : prefixes) entries.push_back({0, p, group});
    };
    add(G::Wh, {"what color is the", "what is the woman", "where is the", "what are", "what color is",
                "what number is", "what color", "what color are the", "what brand", "what is in the",
                "why is the", "what time", "why", "what sport is", "what room is", "what",
                "what is the name", "what is this", "which", "what is on the", "what are the",
                "what type of", "what is the man", "what is the person", "what is the color of the",
                "who is", "where are the", "what does the", "what is", "what animal is", "what is the",
                "what kind of"});
    add(G::YesNo, {"do you", "does the", "is the", "is this", "is there", "are the", "has", "was",
                   "could", "are they", "is he", "how", "is this a", "do", "is it", "are",
                   "is this an", "can you", "does this", "is", "are there any", "are there",
                   "is that a", "is the woman", "is the man", "are these", "is the person",
                   "is this person", "is there a"});
    add(G::Other, {"none of the above"});
    add(G::Number, {"how many", "how many people are", "how many people are in"});
    return TypeLexicon(std::move(entries));
  }();
  return lexicon;
}

TypeLexicon TypeLexicon::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("lexicon: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("lexicon: expected a JSON array");
  std::vector<LexiconEntry> entries;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("prefix") || !item.contains("group"))
      throw ValidationError("lexicon: each entry needs \"prefix\" and \"group\"");
    entries.push_back({0, item.at("prefix").get<std::string>(),
                       coarse_group_from_string(item.at("group").get<std::string>())});
  }
  return TypeLexicon(std::move(entries));
}

TypeLexicon TypeLexicon::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

std::string TypeLexicon::to_json() const {
  json doc = json::array();
  for (const auto& e : entries_) doc.push_back({{"prefix", e.prefix}, {"group", to_string(e.group)}});
  return doc.dump(2) + "\n";
}

const LexiconEntry& TypeLexicon::at(TaskId id) const {
  if (!contains(id)) throw ValidationError("task type " + std::to_string(id) + " is not in the lexicon");
  return entries_[static_cast<std::size_t>(id)];
}

std::optional<TaskId> TypeLexicon::find_prefix(std::string_view prefix) const {
  auto it = by_prefix_.find(prefix);
  if (it == by_prefix_.end()) return std::nullopt;
  return it->second;
}

TypeLexicon TypeLexicon::filtered(CoarseGroup group) const {
  std::vector<LexiconEntry> kept;
  for (const auto& e : entries_)
    if (e.group == group) kept.push_back(e);
  return TypeLexicon(std::move(kept));
}

std::string normalize_question(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool started = false;
  bool pending_space = false;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (!started) {
      if (std::isspace(c) || std::ispunct(c)) continue;
      started = true;
    }
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

TaskId infer_question_type(std::string_view question_text, const TypeLexicon& lexicon) {
  const std::string q = normalize_question(question_text);
  std::optional<TaskId> best;
  std::size_t best_len = 0;
  for (const auto& e : lexicon.entries()) {
    const auto& p = e.prefix;
    if (p.size() <= best_len || p.size() > q.size()) continue;
    if (q.compare(0, p.size(), p) != 0) continue;
    // "is" must not match "isn't" or "island".
    if (q.size() > p.size() && std::isalnum(static_cast<unsigned char>(q[p.size()]))) continue;
    best = e.type_id;
    best_len = p.size();
  }
  if (best) return *best;
  if (auto fallback = lexicon.fallback_id()) return *fallback;
  throw ValidationError("no lexicon prefix matches \"" + q + "\" and the lexicon has no \"" +
                        std::string(kFallbackPrefix) + "\" entry");
}

}  // namespace tpcl
