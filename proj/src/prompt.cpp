#include "lampp/prompt.hpp"

#include <cctype>

#include "lampp/error.hpp"

namespace lampp {

std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::RoomObject: return "room_object";
    case TemplateId::ObjectConfusion: return "object_confusion";
    case TemplateId::ActionOrder: return "action_order";
    case TemplateId::McSegment: return "mc_segment";
    case TemplateId::McNavigation: return "mc_navigation";
  }
  return "unknown";
}

const PromptTemplate& prompt_template(TemplateId id) {
  static const PromptTemplate kRoomObject{TemplateId::RoomObject, "A(n) [r] has a(n) [y]:[completion]"};
  static const PromptTemplate kConfusion{TemplateId::ObjectConfusion, "The [d] looks like the [y]:[completion]"};
  static const PromptTemplate kActionOrder{
      TemplateId::ActionOrder,
      "Your task is to [t]. Here is an *unordered* set of possible actions: {[Y]}. Please order these actions "
      "for your task. The step after [y] can be[completion]"};
  static const PromptTemplate kMcSegment{
      TemplateId::McSegment,
      "You can see: [detections]\n\nYou are in the[r]\nThe thing that looks like [d] is actually[y]."};
  static const PromptTemplate kMcNavigation{
      TemplateId::McNavigation,
      "The house has: [rooms].\nYou want to find a [g]. First, go to each[r0]. If not found, go to each[r1]. "
      "If not found, go to each"};
  switch (id) {
    case TemplateId::RoomObject: return kRoomObject;
    case TemplateId::ObjectConfusion: return kConfusion;
    case TemplateId::ActionOrder: return kActionOrder;
    case TemplateId::McSegment: return kMcSegment;
    case TemplateId::McNavigation: return kMcNavigation;
  }
  return kRoomObject;
}

std::string_view indefinite_article(std::string_view noun) {
  for (char c : noun) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    switch (std::tolower(static_cast<unsigned char>(c))) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
      default: return "a";
    }
  }
  return "a";
}

namespace {

struct Piece {
  bool is_slot;
  std::string text;
};

std::vector<Piece> tokenize(const std::string& text) {
  std::vector<Piece> pieces;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('[', pos);
    if (open == std::string::npos) {
      pieces.push_back({false, text.substr(pos)});
      break;
    }
    const auto close = text.find(']', open);
    if (close == std::string::npos) {
      pieces.push_back({false, text.substr(pos)});
      break;
    }
    if (open > pos) pieces.push_back({false, text.substr(pos, open - pos)});
    pieces.push_back({true, text.substr(open + 1, close - open - 1)});
    pos = close + 1;
  }
  return pieces;
}

// Replaces the article markers once the full string is known.
std::string resolve_articles(std::string s) {
  for (const std::string marker : {"A(n)", "a(n)"}) {
    std::size_t at = 0;
    while ((at = s.find(marker, at)) != std::string::npos) {
      std::string_view rest(s);
      rest.remove_prefix(at + marker.size());
      std::string article(indefinite_article(rest));
      if (marker[0] == 'A') article[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(article[0])));
      s.replace(at, marker.size(), article);
      at += article.size();
    }
  }
  return s;
}

std::string render_pieces(const PromptTemplate& tpl, const Slots& slots, std::string_view stop_slot) {
  std::string out;
  for (const Piece& p : tokenize(tpl.text)) {
    if (!p.is_slot) {
      out += p.text;
      continue;
    }
    if (!stop_slot.empty() && p.text == stop_slot) {
      while (!out.empty() && (out.back() == ' ')) out.pop_back();
      return resolve_articles(std::move(out));
    }
    auto it = slots.find(p.text);
    if (it == slots.end()) {
      throw Error(Errc::RenderError, "template '" + std::string(template_name(tpl.id)) + "' is missing slot [" +
                                         p.text + "]");
    }
    out += it->second;
  }
  if (!stop_slot.empty()) {
    throw Error(Errc::RenderError, "template '" + std::string(template_name(tpl.id)) + "' has no slot [" +
                                       std::string(stop_slot) + "]");
  }
  return resolve_articles(std::move(out));
}

}  // namespace

std::string render(const PromptTemplate& tpl, const Slots& slots) { return render_pieces(tpl, slots, {}); }

std::string render_prefix(const PromptTemplate& tpl, const Slots& slots, std::string_view stop_slot) {
  if (stop_slot.empty()) throw Error(Errc::RenderError, "stop slot must be named");
  return render_pieces(tpl, slots, stop_slot);
}

std::string join_labels(const std::vector<std::string>& labels, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += sep;
    out += labels[i];
  }
  return out;
}

std::string mc_navigation_prompt(const std::vector<std::pair<std::string, int>>& inventory, std::string_view goal,
                                 const std::vector<std::string>& chosen) {
  std::vector<std::string> parts;
  for (const auto& [type, count] : inventory) {
    parts.push_back(std::to_string(count) + " " + type + (count == 1 ? "" : "s"));
  }
  std::string prompt = render_prefix(prompt_template(TemplateId::McNavigation),
                                     {{"rooms", join_labels(parts)}, {"g", std::string(goal)}}, "r0");
  for (const std::string& room : chosen) prompt += " " + room + ". If not found, go to each";
  return prompt;
}

}  // namespace lampp
