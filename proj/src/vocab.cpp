#include "lampp/vocab.hpp"

#include "lampp/error.hpp"

namespace lampp {

std::string_view vocab_kind_name(VocabKind kind) {
  switch (kind) {
    case VocabKind::Room: return "room";
    case VocabKind::Object: return "object";
    case VocabKind::Action: return "action";
    case VocabKind::Task: return "task";
    case VocabKind::Goal: return "goal";
  }
  return "object";
}

VocabKind parse_vocab_kind(std::string_view name) {
  for (VocabKind k : {VocabKind::Room, VocabKind::Object, VocabKind::Action, VocabKind::Task, VocabKind::Goal}) {
    if (vocab_kind_name(k) == name) return k;
  }
  throw Error(Errc::InvalidInput, "unknown vocabulary kind '" + std::string(name) + "'");
}

LabelVocab::LabelVocab(VocabKind kind, std::vector<std::string> names) : kind_(kind), names_(std::move(names)) {
  lookup_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw Error(Errc::InvalidInput, "empty label in vocabulary");
    if (!lookup_.emplace(names_[i], i).second) {
      throw Error(Errc::InvalidInput, "duplicate label '" + names_[i] + "'");
    }
  }
}

std::optional<std::size_t> LabelVocab::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelVocab::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(Errc::UnknownLabel, "'" + std::string(name) + "' is not in the " +
                                      std::string(vocab_kind_name(kind_)) + " vocabulary");
}

nlohmann::json to_json(const LabelVocab& vocab) {
  return {{"kind", vocab_kind_name(vocab.kind())}, {"names", vocab.names()}};
}

LabelVocab vocab_from_json(const nlohmann::json& j) {
  return LabelVocab(parse_vocab_kind(j.at("kind").get<std::string>()), j.at("names").get<std::vector<std::string>>());
}

}  // namespace lampp
