#pragma once

#include <string>

#include "lampp/prior.hpp"
#include "lampp/prompt.hpp"
#include "lampp/scorer.hpp"
#include "lampp/vocab.hpp"

namespace lampp {

// Scores every (ctx, row) cell with a plausibility template and converts the
// grid to a table. RoomObject fills [r] from ctx and [y] from row;
// ObjectConfusion fills [y] from ctx and [d] from row.
PriorTable build_plausibility_prior(Scorer& scorer, TemplateId id, std::string kind, const LabelVocab& ctx,
                                    const LabelVocab& row, bool normalize_rows,
                                    std::size_t parallelism = Scorer::kDefaultParallelism);

// One ordering prompt per action, each scored against every action name.
DirichletPrior build_action_prior(Scorer& scorer, const std::string& task, const LabelVocab& actions, double lambda,
                                  std::size_t parallelism = Scorer::kDefaultParallelism);

}  // namespace lampp
