#include "lampp/prior_build.hpp"

#include <cmath>

#include "lampp/error.hpp"

namespace lampp {

PriorTable build_plausibility_prior(Scorer& scorer, TemplateId id, std::string kind, const LabelVocab& ctx,
                                    const LabelVocab& row, bool normalize_rows, std::size_t parallelism) {
  if (id != TemplateId::RoomObject && id != TemplateId::ObjectConfusion) {
    throw Error(Errc::InvalidInput, "template '" + std::string(template_name(id)) + "' is not a plausibility prompt");
  }
  std::vector<ScoreRequest> requests;
  std::vector<std::pair<std::string, std::string>> cells;
  for (const auto& c : ctx.names()) {
    for (const auto& r : row.names()) {
      const Slots slots = id == TemplateId::ObjectConfusion ? Slots{{"y", c}, {"d", r}} : Slots{{"r", c}, {"y", r}};
      requests.push_back({render_prefix(prompt_template(id), slots, "completion"), plausibility_completions()});
      cells.emplace_back(c, r);
    }
  }
  const auto results = scorer.score_batch(requests, parallelism);
  ScoreGrid grid;
  for (std::size_t i = 0; i < cells.size(); ++i) grid[cells[i]] = {std::exp(results[i][0]), std::exp(results[i][1])};
  return build_conditional_table(std::move(kind), ctx, row, grid, normalize_rows);
}

DirichletPrior build_action_prior(Scorer& scorer, const std::string& task, const LabelVocab& actions, double lambda,
                                  std::size_t parallelism) {
  std::vector<std::string> candidates;
  for (const auto& a : actions.names()) candidates.push_back(as_completion(a));
  const std::string listing = join_labels(actions.names());
  std::vector<ScoreRequest> requests;
  for (const auto& a : actions.names()) {
    const Slots slots{{"t", task}, {"Y", listing}, {"y", a}};
    requests.push_back({render_prefix(prompt_template(TemplateId::ActionOrder), slots, "completion"), candidates});
  }
  const auto results = scorer.score_batch(requests, parallelism);
  std::map<std::string, std::vector<double>> rows;
  for (std::size_t i = 0; i < actions.size(); ++i) rows[actions.name(i)] = normalize_logprobs(results[i]);
  return build_dirichlet(task, actions, rows, lambda);
}

}  // namespace lampp
