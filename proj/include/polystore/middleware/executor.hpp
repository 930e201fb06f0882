#pragma once

#include <string>
#include <vector>

#include "polystore/island/polystore.hpp"
#include "polystore/island/result.hpp"
#include "polystore/middleware/plan.hpp"

namespace polystore::mw {

struct StepStat {
  std::size_t index = 0;
  std::string description;
  double ms = 0.0;
};

struct Execution {
  island::Result result;
  std::vector<StepStat> steps;
  double total_ms = 0.0;
};

/// Runs the steps in order, then drops every temp object the plan created.
/// Container results are cast into the host island's model on migration;
/// placeholders in remainder text are replaced with the migrated names.
/// Errors keep their code and gain the failing step.
Execution execute_plan(island::Polystore& ps, const poly::Decomposition& d, const QueryPlan& plan);

}  // namespace polystore::mw
