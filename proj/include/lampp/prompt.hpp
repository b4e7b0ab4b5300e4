#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lampp {

enum class TemplateId { RoomObject, ObjectConfusion, ActionOrder, McSegment, McNavigation };

std::string_view template_name(TemplateId id);

// Template text uses [slot] placeholders. "A(n)" / "a(n)" resolve to the
// article matching the next rendered word.
struct PromptTemplate {
  TemplateId id;
  std::string text;
};

using Slots = std::map<std::string, std::string>;

const PromptTemplate& prompt_template(TemplateId id);

// Renders the whole template. Throws RenderError on a missing slot.
std::string render(const PromptTemplate& tpl, const Slots& slots);

// Renders the text that precedes `stop_slot`: the part the LM conditions on
// when the slot is the completion being scored. Trailing whitespace is
// dropped since candidates carry their own leading space.
std::string render_prefix(const PromptTemplate& tpl, const Slots& slots, std::string_view stop_slot);

// "a" or "an" by the vowel-initial rule.
std::string_view indefinite_article(std::string_view noun);

// Completion strings scored for plausibility prompts.
inline const std::vector<std::string>& plausibility_completions() {
  static const std::vector<std::string> kCompletions{" plausible", " implausible"};
  return kCompletions;
}

// Leading-space completion for a label.
inline std::string as_completion(std::string_view label) { return " " + std::string(label); }

std::string join_labels(const std::vector<std::string>& labels, std::string_view sep = ", ");

// Prompt for the navigation chaining baseline after `chosen` room types have
// already been emitted. `inventory` is e.g. {{"bathroom", 3}, {"living room", 1}}.
std::string mc_navigation_prompt(const std::vector<std::pair<std::string, int>>& inventory, std::string_view goal,
                                 const std::vector<std::string>& chosen);

}  // namespace lampp
