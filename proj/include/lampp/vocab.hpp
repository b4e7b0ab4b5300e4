#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace lampp {

enum class VocabKind { Room, Object, Action, Task, Goal };

std::string_view vocab_kind_name(VocabKind kind);
VocabKind parse_vocab_kind(std::string_view name);

// Ordered set of distinct labels. The order is canonical: it fixes table
// indexing and every argmax tie-break in the library.
class LabelVocab {
 public:
  LabelVocab() = default;
  LabelVocab(VocabKind kind, std::vector<std::string> names);

  VocabKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }
  // Throws Error{UnknownLabel}.
  std::size_t index(std::string_view name) const;

  friend bool operator==(const LabelVocab& a, const LabelVocab& b) {
    return a.kind_ == b.kind_ && a.names_ == b.names_;
  }

 private:
  VocabKind kind_ = VocabKind::Object;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

nlohmann::json to_json(const LabelVocab& vocab);
LabelVocab vocab_from_json(const nlohmann::json& j);

}  // namespace lampp
